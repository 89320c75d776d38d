import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussnet.errors import InputError
from gaussnet.kernel_core import (
    CubeFrame,
    GaussianSum,
    GaussianTerm,
    affine_pullback_point,
    eval_gaussian_sum,
    gaussian_fourier,
    map_sum_to_cube,
)

finite = st.floats(-5, 5, allow_nan=False)


def test_empty_sum_is_zero():
    assert eval_gaussian_sum(GaussianSum.empty(2), [0.0, 0.0]) == 0.0


def test_single_term_peak_and_offset():
    s = GaussianSum(1, [1.0], [[0.0]], [1.0])
    assert eval_gaussian_sum(s, 0.0) == 1.0
    s2 = GaussianSum(1, [2.0], [[0.0]], [1.0])
    assert eval_gaussian_sum(s2, 1.0) == pytest.approx(0.7357588823428847, abs=1e-15)


def test_dimension_mismatch_raises():
    s = GaussianSum(2, [1.0], [[0.0, 0.0]], [1.0])
    with pytest.raises(InputError):
        eval_gaussian_sum(s, [0.0, 0.0, 0.0])


def test_term_validation():
    with pytest.raises(InputError):
        GaussianTerm(1.0, (0.0,), 0.0)
    with pytest.raises(InputError):
        GaussianSum(1, [1.0], [[math.inf]], [1.0])


def test_underflow_terms_contribute_zero():
    s = GaussianSum(1, [1.0, 1.0], [[0.0], [100.0]], [1.0, 1.0])
    assert eval_gaussian_sum(s, 0.0) == 1.0


def test_gaussian_fourier_values():
    assert gaussian_fourier(1.0, 0.0) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gaussian_fourier(2.0, np.zeros(2)) == pytest.approx(4 * math.pi, rel=1e-15)
    # oracle: quad of e^{-x^2} cos(2x)
    assert gaussian_fourier(1.0, 2.0) == pytest.approx(0.6520493321732922, rel=1e-12)
    with pytest.raises(InputError):
        gaussian_fourier(0.0, 1.0)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_gaussian_fourier_against_quadrature(sigma):
    for xi in np.linspace(-10, 10, 21):
        with mpmath.workdps(30):
            val = float(mpmath.quad(lambda x: mpmath.exp(-((x / sigma) ** 2)) * mpmath.cos(xi * x),
                                    [-mpmath.inf, 0, mpmath.inf]))
        ref = gaussian_fourier(sigma, xi)
        assert abs(val - ref) <= 1e-10 * max(ref, 1e-300) + 1e-15


def test_pullback_examples():
    assert np.allclose(affine_pullback_point([1.0, 2.0], CubeFrame((1.0, 2.0), 3.0)), 0.0)
    assert affine_pullback_point([2.25], CubeFrame((2.0,), 0.5))[0] == 0.5
    assert np.array_equal(affine_pullback_point([3.0, 1.0], CubeFrame((1.0, 1.0), 2.0)), [1.0, 0.0])


def test_map_sum_to_cube_examples():
    s = GaussianSum(1, [1.0], [[0.0]], [1.0])
    assert map_sum_to_cube(s, CubeFrame((0.0,), 1.0)) == s
    out = map_sum_to_cube(s, CubeFrame((0.0,), 2.0))
    assert out.sigmas[0] == 2.0 and out.centers[0, 0] == 0.0
    s = GaussianSum(1, [1.0], [[0.5]], [1.0])
    frame = CubeFrame((3.0,), 2.0)
    assert eval_gaussian_sum(map_sum_to_cube(s, frame), 4.0) == eval_gaussian_sum(s, 0.5)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.tuples(finite, finite, finite, st.floats(0.1, 3)), min_size=1, max_size=6),
    st.tuples(finite, finite),
    st.integers(-3, 3),
    st.tuples(finite, finite),
)
def test_affine_covariance(terms, corner, j, x):
    s = GaussianSum(2, [t[0] for t in terms], [[t[1], t[2]] for t in terms], [t[3] for t in terms])
    frame = CubeFrame(corner, 2.0**j)
    lhs = eval_gaussian_sum(map_sum_to_cube(s, frame), list(x))
    rhs = eval_gaussian_sum(s, affine_pullback_point(np.array(x), frame))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(finite, finite, st.floats(0.1, 3)), min_size=1, max_size=8), finite)
def test_linear_in_amplitudes(terms, x):
    s = GaussianSum(1, [t[0] for t in terms], [[t[1]] for t in terms], [t[2] for t in terms])
    assert eval_gaussian_sum(s.scaled(2.0), x) == 2.0 * eval_gaussian_sum(s, x)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6), finite, finite, st.floats(1e-3, 1e3)), max_size=6))
def test_json_round_trip_is_bit_exact(terms):
    s = GaussianSum(2, [t[0] for t in terms], [[t[1], t[2]] for t in terms], [t[3] for t in terms])
    back = GaussianSum.from_json(s.to_json())
    assert back == s
    assert json.loads(s.to_json())["d"] == 2


def test_from_json_rejects_malformed():
    with pytest.raises(InputError):
        GaussianSum.from_dict({"d": 1, "terms": [{"A": 1.0}]})
    with pytest.raises(InputError):
        GaussianSum.from_dict({"d": 2, "terms": [{"A": 1.0, "c": [0.0], "sigma": 1.0}]})


def test_evaluation_order_is_deterministic():
    rng = np.random.default_rng(3)
    s = GaussianSum(1, rng.normal(size=500), rng.normal(size=(500, 1)), rng.uniform(0.2, 2, 500))
    x = rng.normal(size=(50, 1))
    assert np.array_equal(eval_gaussian_sum(s, x), eval_gaussian_sum(s, x))
