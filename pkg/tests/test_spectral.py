import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gaussnet.errors import ConditioningError, InputError, ResourceError
from gaussnet.kernel_core import gaussian_fourier
from gaussnet.spectral import (
    SpectralFunction,
    ball_integer_points,
    eval_physical,
    eval_uniform_1d,
    fourier_divide,
    l1_spectrum,
    sample_lattice,
)


def smooth_bump(R):
    def fhat(xi):
        r2 = np.sum(xi**2, axis=-1) / R**2
        out = np.zeros(r2.shape)
        inside = r2 < 1
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    return fhat


def test_grid_validation():
    with pytest.raises(InputError):
        SpectralFunction(1, 1.0, 31, np.zeros(31))
    with pytest.raises(InputError):
        SpectralFunction(1, 1.0, 32, np.zeros(30))


def test_values_outside_ball_are_zeroed():
    f = SpectralFunction.from_callable(lambda xi: np.ones(xi.shape[:-1]), 2, 1.0, 32)
    assert np.all(f.values[f.outside_mask()] == 0)
    assert f.values[16, 16] == 1


def test_fourier_divide_inverts_multiplication():
    R, sigma = 5.0, 1.0
    g = SpectralFunction.from_callable(smooth_bump(R), 1, R, 128)
    phihat = gaussian_fourier(sigma, g.axis()[:, None])
    f = g.with_values(g.values * phihat)
    back = fourier_divide(f, sigma)
    assert np.allclose(back.values, g.values, rtol=1e-12, atol=0)


def test_fourier_divide_amplification():
    R = 8 * math.pi / 3
    f = SpectralFunction.from_callable(lambda xi: np.ones(xi.shape[:-1]), 1, R, 512)
    out = fourier_divide(f, 1.0)
    ratio = np.max(np.abs(out.values)) / np.max(np.abs(f.values))
    assert ratio == pytest.approx(math.exp(R**2 / 4) / math.sqrt(math.pi), rel=1e-8)
    assert ratio == pytest.approx(2.3525569e7, rel=1e-7)


def test_fourier_divide_zero_and_conditioning():
    f = SpectralFunction(1, 3.0, 64, np.zeros(64))
    assert np.all(fourier_divide(f, 1.0).values == 0)
    big = SpectralFunction(1, 60.0, 64, np.ones(64))
    with pytest.raises(ConditioningError, match="exp"):
        fourier_divide(big, 1.0)
    with pytest.raises(InputError):
        fourier_divide(f, -1.0)


def test_eval_physical_matches_adaptive_quadrature():
    R = 4.0
    fhat = smooth_bump(R)
    f = SpectralFunction.from_callable(fhat, 1, R, 512)
    for x in (0.0, 0.7, 3.0):
        ref, _ = quad(lambda xi: fhat(np.array([[xi]]))[0] * math.cos(x * xi), -R, R, epsabs=1e-15, limit=200)
        assert eval_physical(f, x) == pytest.approx(ref / (2 * math.pi), abs=1e-9)


def test_eval_physical_grid_refinement():
    fhat = smooth_bump(4.0)
    a = SpectralFunction.from_callable(fhat, 1, 4.0, 256)
    b = SpectralFunction.from_callable(fhat, 1, 4.0, 512)
    x = np.linspace(-10, 10, 41)
    assert np.max(np.abs(eval_physical(a, x) - eval_physical(b, x))) < 1e-12


def test_hermitian_and_general_paths_agree():
    R = 4.0
    xi = np.linspace(-R, R, 64, endpoint=False)
    vals = smooth_bump(R)(xi[:, None]) * np.exp(-0.5j * xi)
    herm = SpectralFunction(1, R, 64, vals)
    assert herm.hermitian
    x = np.linspace(-5, 5, 11)
    general = np.array([np.sum(herm.values * np.exp(1j * xi * t)).real * herm.weight / (2 * math.pi) for t in x])
    assert np.allclose(eval_physical(herm, x), general, atol=1e-14)


def test_imaginary_residue_small_for_hermitian():
    R = 4.0
    f = SpectralFunction.from_callable(smooth_bump(R), 1, R, 128)
    xi = f.axis()
    x = np.linspace(-3, 3, 13)
    full = (np.exp(1j * np.outer(x, xi)) @ f.values) * f.weight / (2 * math.pi)
    assert np.max(np.abs(full.imag)) < 1e-12 * l1_spectrum(f)


def test_eval_uniform_matches_direct():
    f = SpectralFunction.from_callable(smooth_bump(8 * math.pi / 3), 1, 8 * math.pi / 3, 1024)
    dx = 2.0**-6
    vals = eval_uniform_1d(f, dx, -300, 300)
    assert np.allclose(vals, eval_physical(f, np.arange(-300, 301) * dx), atol=1e-14)


def test_eval_physical_2d_separable():
    # 1-D bumps of radius 2: the product support [-2, 2]^2 lies inside the ball of radius 3
    R, b = 3.0, smooth_bump(2.0)
    f1 = SpectralFunction.from_callable(b, 1, R, 64)
    f2 = SpectralFunction.from_callable(lambda xi: b(xi[..., :1]) * b(xi[..., 1:]), 2, R, 64)
    x = np.array([[0.3, -0.2], [1.0, 2.0]])
    expect = eval_physical(f1, x[:, 0]) * eval_physical(f1, x[:, 1])
    assert np.allclose(eval_physical(f2, x), expect, rtol=1e-12, atol=1e-15)


def test_lattice_key_sets():
    f = SpectralFunction.from_callable(smooth_bump(2.0), 1, 2.0, 64)
    samples = sample_lattice(f, 0.5, 1.0)
    assert sorted(samples.as_dict()) == [(-1.0,), (-0.5,), (0.0,), (0.5,), (1.0,)]
    f2 = SpectralFunction.from_callable(smooth_bump(2.0), 2, 2.0, 32)
    assert len(sample_lattice(f2, 1.0, 1.0)) == 5
    assert len(sample_lattice(f, 0.1, 10.0)) == 201


def test_lattice_cap():
    with pytest.raises(ResourceError):
        ball_integer_points(2, 1e6, cap=1000)


def test_l1_spectrum():
    assert l1_spectrum(SpectralFunction(1, 1.0, 32, np.zeros(32))) == 0
    f = SpectralFunction.from_callable(lambda xi: gaussian_fourier(1.0, xi), 1, 10.0, 512)
    assert l1_spectrum(f) == pytest.approx(2 * math.pi, abs=1e-6)
    assert l1_spectrum(f.scaled(3.0)) == pytest.approx(3 * l1_spectrum(f), rel=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-20, 20))
def test_eval_linear_in_values(a, b, x):
    f = SpectralFunction.from_callable(smooth_bump(3.0), 1, 3.0, 64)
    g = SpectralFunction.from_callable(lambda xi: np.cos(xi[..., 0]) * smooth_bump(3.0)(xi), 1, 3.0, 64)
    combo = f.with_values(a * f.values + b * g.values)
    assert eval_physical(combo, x) == pytest.approx(a * eval_physical(f, x) + b * eval_physical(g, x), abs=1e-13)


def _decay_violations(w, rho, ks, sigma=0.5):
    """Orders k where ``|f_phi|(1+|x|)^k`` peaks outside ``|x - 1/2| <= rho/2``."""
    fphi = fourier_divide(w.psi((1,)), sigma)
    r = np.linspace(-rho, rho, 8001)
    vals = np.abs(eval_physical(fphi, r))
    inner = np.abs(r - 0.5) <= rho / 2
    bad = []
    for k in ks:
        weighted = vals * (1 + np.abs(r)) ** k
        if weighted[~inner].max() > weighted[inner].max():
            bad.append(k)
    return bad


@pytest.mark.parametrize("rho", [20.0, 40.0])
def test_fphi_decay_surrogate(w1, rho):
    assert _decay_violations(w1, rho, range(9)) == []


def test_fphi_decay_surrogate_low_orders(w1):
    for rho in (20.0, 40.0, 80.0):
        assert _decay_violations(w1, rho, range(6)) == []


def test_dump_round_trip(tmp_path):
    f = SpectralFunction.from_callable(smooth_bump(2.0), 1, 2.0, 32)
    f.dump(tmp_path / "f.json")
    import json

    back = SpectralFunction.from_dict(json.loads((tmp_path / "f.json").read_text()))
    assert np.array_equal(back.values, f.values)
