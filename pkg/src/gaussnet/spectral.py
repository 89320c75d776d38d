"""Bandlimited functions stored as Fourier samples on a uniform grid.

The grid has ``M`` points per axis, ``xi_m = -R + 2R m / M`` for
``m = 0..M-1``.  Values vanish at and beyond ``|xi| = R``, so the trapezoid
rule over ``[-R, R]^d`` reduces to a plain sum with weight ``(2R/M)^d``.

Inversion uses the standard sign, ``f(x) = (2 pi)^-d int fhat(xi) e^{+i<x,xi>} dxi``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConditioningError, InputError, ResourceError
from .kernel_core import as_points, is_single_point

# sigma^2 R^2 / 4 above this would put 1/phihat near the top of double range
MAX_DIVISION_EXPONENT = 600.0
DEFAULT_LATTICE_CAP = 10**7

_CHUNK_ELEMS = 1 << 21


def default_resolution(d: int) -> int:
    return {1: 512, 2: 256}.get(d, 64)


def axis_grid(R: float, M: int) -> np.ndarray:
    return -R + 2.0 * R * np.arange(M) / M


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Function whose Fourier transform is supported in the ball ``B(0, R)``."""

    d: int
    R: float
    M: int
    values: np.ndarray = field(repr=False)
    hermitian: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.M < 32 or self.M % 2:
            raise InputError(f"grid resolution must be even and >= 32, got {self.M}")
        if not self.R > 0:
            raise InputError(f"ball radius must be positive, got {self.R}")
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.M,) * self.d:
            raise InputError(f"values shape {vals.shape} does not match grid {(self.M,) * self.d}")
        vals[self.outside_mask()] = 0.0
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "hermitian", _is_hermitian(vals))

    @classmethod
    def from_callable(cls, fhat: Callable[[np.ndarray], np.ndarray], d: int, R: float, M: int | None = None):
        """Sample ``fhat`` (called with an ``(..., d)`` array of frequencies) on the grid."""
        M = M or default_resolution(d)
        axes = [axis_grid(R, M)] * d
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(d, R, M, fhat(mesh))

    @property
    def step(self) -> float:
        return 2.0 * self.R / self.M

    @property
    def weight(self) -> float:
        return self.step**self.d

    def axis(self) -> np.ndarray:
        return axis_grid(self.R, self.M)

    def radius_sq(self) -> np.ndarray:
        ax2 = self.axis() ** 2
        r2 = np.zeros((self.M,) * self.d)
        for i in range(self.d):
            shape = [1] * self.d
            shape[i] = self.M
            r2 = r2 + ax2.reshape(shape)
        return r2

    def outside_mask(self) -> np.ndarray:
        return self.radius_sq() > self.R**2 * (1 + 1e-14)

    def support_linf_radius(self) -> float:
        """Largest ``|xi|_inf`` carrying a nonzero value (0 for the zero function)."""
        nz = np.nonzero(np.abs(self.values) > 0)
        if not len(nz[0]):
            return 0.0
        ax = np.abs(self.axis())
        return float(max(ax[idx].max() for idx in nz))

    def aliasing_bound(self) -> float:
        """Spacing below which the lattice scheme does not alias.

        For a lattice ``h Z^d`` the offending dual shifts lie in ``(2 pi / h) Z^d``;
        the Gaussian ratio decays for all of them iff ``2 pi / h > 2 |xi|_inf``
        over the support, which is ``h < pi / |xi|_inf``.
        """
        r = self.support_linf_radius()
        return math.inf if r == 0 else math.pi / r

    def with_values(self, values: np.ndarray) -> "SpectralFunction":
        return SpectralFunction(self.d, self.R, self.M, values)

    def scaled(self, factor: float) -> "SpectralFunction":
        return self.with_values(self.values * factor)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "R": self.R,
            "M": self.M,
            "re": self.values.real.ravel().tolist(),
            "im": self.values.imag.ravel().tolist(),
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralFunction":
        d, M = int(data["d"]), int(data["M"])
        vals = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
        return cls(d, float(data["R"]), M, vals.reshape((M,) * d))


def _is_hermitian(vals: np.ndarray) -> bool:
    # index m <-> frequency -R + m*step, so -xi sits at (M - m) mod M
    M = vals.shape[0]
    flipped = vals
    for ax in range(vals.ndim):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    scale = np.max(np.abs(vals)) if vals.size else 0.0
    return bool(np.all(np.abs(flipped - np.conj(vals)) <= 1e-13 * max(scale, 1e-300)))


def fourier_divide(f: SpectralFunction, sigma: float) -> SpectralFunction:
    """Return the function whose transform is ``fhat / phihat_sigma`` on the ball."""
    if not sigma > 0:
        raise InputError(f"sigma must be positive, got {sigma}")
    expo = sigma**2 * f.R**2 / 4.0
    if expo > MAX_DIVISION_EXPONENT:
        raise ConditioningError(
            f"1/phihat reaches exp({expo:.1f}) on B(0, {f.R:g}); "
            f"sigma^2 R^2 / 4 must not exceed {MAX_DIVISION_EXPONENT:g}"
        )
    r2 = f.radius_sq()
    inv_phihat = np.exp(sigma**2 * r2 / 4.0) / (sigma * math.sqrt(math.pi)) ** f.d
    inv_phihat[f.outside_mask()] = 0.0
    return f.with_values(f.values * inv_phihat)


def eval_physical(f: SpectralFunction, x) -> np.ndarray | float:
    """Trapezoid-rule inverse transform at a point or an ``(n, d)`` array of points.

    Only the real part is returned.
    """
    scalar = is_single_point(x, f.d)
    pts = as_points(x, f.d)
    xi = f.axis()
    coef = f.values * (f.weight / (2.0 * math.pi) ** f.d)
    out = np.empty(len(pts))
    if f.d == 1 and f.hermitian:
        # pair xi with -xi: sum = c_0-term + 2 Re sum_{xi>0}; xi_0 = -R carries zero
        half = slice(f.M // 2 + 1, f.M)
        xp = xi[half]
        cr = 2.0 * coef[half].real
        ci = 2.0 * coef[half].imag
        c0 = coef[f.M // 2].real
        step = max(1, _CHUNK_ELEMS // len(xp))
        for lo in range(0, len(pts), step):
            ph = np.outer(pts[lo : lo + step, 0], xp)
            out[lo : lo + step] = c0 + np.cos(ph) @ cr - np.sin(ph) @ ci
    else:
        per_point = f.M ** max(1, f.d - 1)
        step = max(1, _CHUNK_ELEMS // per_point)
        for lo in range(0, len(pts), step):
            p = pts[lo : lo + step]
            acc = np.exp(1j * np.outer(p[:, 0], xi)) @ coef.reshape(f.M, -1)
            for axis in range(1, f.d):
                acc = acc.reshape(len(p), f.M, -1)
                e = np.exp(1j * np.outer(p[:, axis], xi))
                acc = np.einsum("nm,nmr->nr", e, acc)
            out[lo : lo + step] = acc.reshape(len(p)).real
    return float(out[0]) if scalar else out


def eval_uniform_1d(f: SpectralFunction, dx: float, n_lo: int, n_hi: int) -> np.ndarray:
    """Values of a univariate ``f`` at ``x_n = n dx`` for ``n_lo <= n <= n_hi``.

    When ``2 pi / (dx * step)`` is an integer ``L >= M`` the sum is a length-L
    DFT and is done by FFT; otherwise falls back to direct evaluation.
    """
    if f.d != 1:
        raise InputError("uniform-grid evaluation is univariate")
    n = np.arange(n_lo, n_hi + 1)
    ratio = 2.0 * math.pi / (dx * f.step)
    L = int(round(ratio))
    if abs(ratio - L) > 1e-9 * ratio or L < f.M:
        return eval_physical(f, n * dx)
    coef = np.zeros(L, dtype=complex)
    coef[: f.M] = f.values * (f.weight / (2.0 * math.pi))
    sums = np.fft.ifft(coef) * L
    x = n * dx
    return (np.exp(-1j * f.R * x) * sums[n % L]).real


@dataclass(frozen=True, eq=False)
class LatticeSamples:
    h: float
    rho: float
    points: np.ndarray = field(repr=False)
    multi_index: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {tuple(float(v) for v in p): float(val) for p, val in zip(self.points, self.values)}

    def __len__(self) -> int:
        return len(self.values)


def ball_integer_points(d: int, radius_sq: float, cap: int = DEFAULT_LATTICE_CAP) -> np.ndarray:
    """All ``m in Z^d`` with ``|m|^2 <= radius_sq``, in lexicographic order.

    ``radius_sq`` within 1e-9 (relative) of an integer is snapped to it, so
    points exactly on the sphere are kept.
    """
    near = round(radius_sq)
    if abs(radius_sq - near) <= 1e-9 * max(1.0, radius_sq):
        radius_sq = near
    r = int(math.floor(math.sqrt(max(radius_sq, 0.0)) + 1e-12))
    approx = (2 * r + 1) ** d
    if approx > cap * 4 and (math.pi ** (d / 2) / math.gamma(d / 2 + 1)) * max(r, 1) ** d > cap:
        raise ResourceError(f"lattice of ~{approx} candidate points exceeds cap {cap}")
    grid = np.arange(-r, r + 1)
    pts = np.stack(np.meshgrid(*([grid] * d), indexing="ij"), axis=-1).reshape(-1, d)
    keep = np.sum(pts.astype(np.int64) ** 2, axis=1) <= radius_sq
    pts = pts[keep]
    if len(pts) > cap:
        raise ResourceError(f"lattice of {len(pts)} points exceeds cap {cap}")
    return pts


def sample_lattice(f: SpectralFunction, h: float, rho: float, cap: int = DEFAULT_LATTICE_CAP) -> LatticeSamples:
    """Evaluate ``f`` at every ``alpha in h Z^d`` with ``|alpha| <= rho``."""
    if not (h > 0 and rho > 0):
        raise InputError(f"spacing and radius must be positive, got h={h}, rho={rho}")
    m = ball_integer_points(f.d, (rho / h) ** 2, cap)
    pts = m * h
    return LatticeSamples(h, rho, pts, m, eval_physical(f, pts))


def l1_spectrum(f: SpectralFunction) -> float:
    return float(np.sum(np.abs(f.values)) * f.weight)
