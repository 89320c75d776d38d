import math
import warnings

import numpy as np
import pytest

from gaussnet.budget import SmoothnessParams
from gaussnet.errors import InputError, StudyError
from gaussnet.harness import (
    ErrorGrid,
    RateFit,
    SweepResult,
    grid_for_tree,
    lp_error,
    make_synthetic_tree,
    norm_on_grid,
    operator_bound_sweep,
    rate_study,
    single_wavelet_tree,
)
from gaussnet.assembler import approximate
from gaussnet.kernel_core import GaussianSum, eval_gaussian_sum
from gaussnet.wavelets import synthesize

NS = [64, 128, 256, 512, 1024, 2048, 4096]


def test_grid_validation():
    with pytest.raises(InputError):
        ErrorGrid(((0.0, 1.0),), (10,))
    with pytest.raises(InputError):
        ErrorGrid(((1.0, 1.0),), (64,))
    with pytest.raises(InputError):
        ErrorGrid(((0.0, 1.0),), (64,), p=0.5)


def test_trapezoid_weights():
    g = ErrorGrid(((0.0, 2.0), (-1.0, 1.0)), (65, 129))
    assert g.weights().sum() == pytest.approx(4.0, rel=1e-14)
    x = g.nodes()
    # trapezoid is exact for bilinear integrands
    assert np.dot(g.weights(), x[:, 0] * x[:, 1]) == pytest.approx(0.0, abs=1e-14)
    assert g.refined().resolution == (129, 257)


def test_self_comparison_is_zero(w1):
    t = make_synthetic_tree(1, 1.0)
    s, _ = approximate(t, w1, SmoothnessParams(1.0, 2.0, 1), 1000)
    g = grid_for_tree(t)
    assert lp_error(t, w1, s, g, target=eval_gaussian_sum(s, g.nodes())) == 0.0


def test_empty_sum_error_is_norm_of_target(w1):
    t = single_wavelet_tree(1)
    g = ErrorGrid(((-30.0, 30.0),), (6001,))
    # ||psi||_2 = 1 for the unit-cube wavelet
    assert lp_error(t, w1, GaussianSum.empty(1), g) == pytest.approx(1.0, abs=1e-6)


def test_lp_means_increase_toward_sup(w1):
    t = make_synthetic_tree(1, 1.0)
    s, _ = approximate(t, w1, SmoothnessParams(1.0, 2.0, 1), 512)
    g = grid_for_tree(t)
    r = synthesize(t, w1, g.nodes()) - eval_gaussian_sum(s, g.nodes())
    sup = norm_on_grid(r, g, math.inf)
    means = [norm_on_grid(r, g, p) / g.volume ** (1 / p) for p in (8, 16, 32)]
    assert all(b >= a * (1 - 1e-3) for a, b in zip(means, means[1:]))
    assert means[-1] <= sup * (1 + 1e-3)


def test_sweep_result_slopes():
    r = SweepResult("truncated", [0.4, 0.2, 0.1], [1.0, 1 / 16, 1 / 256], [1.0, 1 / 16, 1 / 256], 4, 0.5)
    assert r.step_slopes() == pytest.approx([4.0, 4.0])
    assert r.fitted_slope == pytest.approx(4.0)
    assert r.spread == 256


def test_sweep_rejects_unknown_kind():
    with pytest.raises(InputError):
        operator_bound_sweep("bogus", [0.1])


def test_localized_sweep_is_bounded(w1):
    hs = [n**-0.5 for n in (50, 100, 200, 400)]
    assert operator_bound_sweep("localized", hs, 4, w=w1).spread < 10


def test_rate_fit_needs_four_points():
    with pytest.raises(StudyError):
        RateFit([1, 2, 3], [1, 2, 3], [1.0, 0.5, 0.2], 1.0, 1.0, 1).fit()
    with pytest.raises(StudyError):
        rate_study(single_wavelet_tree(1), None, SmoothnessParams(1.0, 2.0, 1), [64])


def test_rate_fit_exact_power_law():
    N = [10, 20, 40, 80]
    fit = RateFit(N, N, [n**-1.0 for n in N], 2.0, 1.0, 1).fit()
    assert fit.slope == pytest.approx(-1.0) and fit.residual < 1e-12
    assert fit.ratios == pytest.approx([0.5] * 4)
    assert fit.to_csv().splitlines()[0] == "N,terms,error,seminorm,ratio"


def test_synthetic_tree_is_seeded():
    assert make_synthetic_tree(1, 1.0, seed=3) == make_synthetic_tree(1, 1.0, seed=3)
    assert make_synthetic_tree(1, 1.0, seed=3) != make_synthetic_tree(1, 1.0, seed=4)
    t = make_synthetic_tree(2, 1.0, levels=(-2, 0), per_level=2)
    assert len(t) == 3 * 2 * 3


def test_single_wavelet_study_is_fast(w1):
    fit = rate_study(single_wavelet_tree(1), w1, SmoothnessParams(1.0, 2.0, 1), NS)
    assert fit.slope <= -1.5
    assert fit.excluded == []


def test_study_warns_and_excludes_unfunded(w1):
    t = make_synthetic_tree(1, 1.0)
    with pytest.warns(UserWarning, match="funds no wavelet"):
        fit = rate_study(t, w1, SmoothnessParams(1.0, 2.0, 1), NS)
    assert fit.excluded == [64, 128]


def test_study_stable_under_grid_doubling(w1):
    t = make_synthetic_tree(1, 1.0)
    params = SmoothnessParams(1.0, 2.0, 1)
    g = grid_for_tree(t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = rate_study(t, w1, params, NS, grid=g)
        b = rate_study(t, w1, params, NS, grid=g.refined())
    assert abs(a.slope - b.slope) < 0.05
