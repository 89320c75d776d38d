"""Quasi-interpolation of bandlimited functions by Gaussians on a lattice.

For ``f`` with transform supported in ``B(0, R)`` and ``f_phi`` defined by
``f_phi_hat = fhat / phihat_sigma``, the approximant is

    T_h f(x) = h^d sum_{alpha in h Z^d} f_phi(alpha) phi_sigma(x - alpha).

Poisson summation shows ``T_h f = f`` exactly as long as ``h < pi / |xi|_inf``
on the support.  Keeping only ``|alpha| <= 1/h`` gives the truncated atom;
its error is controlled by the decay of ``f_phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, InputError, ResourceError
from .kernel_core import EXP_FLOOR, CubeFrame, GaussianSum, map_sum_to_cube
from .spectral import (
    DEFAULT_LATTICE_CAP,
    SpectralFunction,
    ball_integer_points,
    eval_physical,
    fourier_divide,
)
from .wavelets import MotherWavelets, WaveletIndex

DEFAULT_SIGMA = 0.5
DEFAULT_MARGIN = 1.5


@lru_cache(maxsize=4096)
def _lattice_norm_table(d: int, bound: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct squared norms ``n <= bound`` of ``Z^d`` and the count of points with ``|m|^2 <= n``."""
    pts = ball_integer_points(d, bound, cap=10**8)
    norms = np.sum(pts.astype(np.int64) ** 2, axis=1)
    values, counts = np.unique(norms, return_counts=True)
    return values, np.cumsum(counts)


def _ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@lru_cache(maxsize=65536)
def choose_h(N: int, d: int) -> tuple[float, int]:
    """Spacing whose truncated lattice ``{m : |m| <= 1/h^2}`` is as large as possible with at most N points.

    Writing ``n = 1/h^4`` for the squared lattice radius, ``n`` is the largest
    attained value of ``|m|^2`` whose ball holds at most ``N`` points, so
    ``h = n^(-1/4)``.  If only the origin fits, ``h = sqrt(2)`` (radius below 1).
    Returns ``(h, count)``.
    """
    if N < 1 or d < 1:
        raise InputError(f"need N >= 1 and d >= 1, got N={N}, d={d}")
    if N < 1 + 2 * d:
        return math.sqrt(2.0), 1
    bound = int(math.ceil((N / _ball_volume(d)) ** (2.0 / d) * 1.5)) + 4
    while True:
        values, cum = _lattice_norm_table(d, bound)
        if cum[-1] > N:
            break
        bound *= 2
    pos = int(np.searchsorted(cum, N, side="right")) - 1
    return int(values[pos]) ** -0.25, int(cum[pos])


def lattice_count(h: float, d: int) -> int:
    """Number of truncated lattice points ``#{m in Z^d : |m|^2 <= 1/h^4}``."""
    return len(ball_integer_points(d, h**-4.0))


def _check_aliasing(f: SpectralFunction, h: float, bound: float | None):
    bound = f.aliasing_bound() if bound is None else bound
    if not h < bound:
        raise DomainError(f"spacing h={h:g} aliases; need h < {bound:g}")


def full_approximant(f: SpectralFunction, sigma: float, h: float, window: Sequence[tuple[float, float]],
                     *, check_aliasing: bool = True, cap: int = DEFAULT_LATTICE_CAP) -> GaussianSum:
    """All lattice terms that can reach ``window`` above the underflow floor.

    Centers farther than ``sigma * sqrt(745)`` from the window contribute
    exactly zero in double precision there and are omitted.
    """
    if not h > 0:
        raise InputError(f"spacing must be positive, got {h}")
    if len(window) != f.d:
        raise InputError("window dimension does not match function dimension")
    if check_aliasing:
        _check_aliasing(f, h, None)
    f_phi = fourier_divide(f, sigma)
    pad = sigma * math.sqrt(-EXP_FLOOR)
    axes = [np.arange(math.ceil((lo - pad) / h), math.floor((hi + pad) / h) + 1) for lo, hi in window]
    total = math.prod(len(a) for a in axes)
    if total > cap:
        raise ResourceError(f"full lattice of {total} points exceeds cap {cap}")
    m = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, f.d)
    centers = m * h
    amps = h**f.d * eval_physical(f_phi, centers)
    keep = amps != 0.0
    return GaussianSum(f.d, amps[keep], centers[keep], np.full(int(keep.sum()), sigma))


@dataclass(frozen=True)
class AtomApproximation:
    """Truncated approximant of one generator at spacing ``h``, in the reference frame.

    The ``h^d`` quadrature weight is already folded into the amplitudes.
    """

    gender: tuple[int, ...] | None
    h: float
    sigma: float
    terms: GaussianSum = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.terms)


def truncated_approximant(f: SpectralFunction, sigma: float, h: float, *, gender=None,
                          check_aliasing: bool = True, aliasing_bound: float | None = None,
                          cap: int = DEFAULT_LATTICE_CAP) -> AtomApproximation:
    """Keep the lattice centers ``alpha in h Z^d`` with ``|alpha| <= 1/h``."""
    if not h > 0:
        raise InputError(f"spacing must be positive, got {h}")
    if check_aliasing:
        _check_aliasing(f, h, aliasing_bound)
    f_phi = fourier_divide(f, sigma)
    m = ball_integer_points(f.d, h**-4.0, cap)
    centers = m * h
    amps = h**f.d * eval_physical(f_phi, centers)
    terms = GaussianSum(f.d, amps, centers, np.full(len(amps), sigma))
    return AtomApproximation(None if gender is None else tuple(gender), h, sigma, terms)


def min_budget_for_spacing(h0: float, d: int) -> int:
    """Smallest N with ``choose_h(N, d) < h0``."""
    n_needed = h0**-4.0
    bound = int(math.ceil(n_needed)) + 1
    values, cum = _lattice_norm_table(d, bound + 2 * int(math.sqrt(bound)) + 4)
    idx = int(np.searchsorted(values, n_needed, side="right"))
    # the lattice must at least cover the 3^d neighbourhood of the origin
    while cum[idx] < 3**d:
        idx += 1
    return int(cum[idx])


def default_n0(w: MotherWavelets, margin: float = DEFAULT_MARGIN) -> int:
    """Smallest atom budget whose spacing sits a factor ``margin`` inside the no-aliasing bound."""
    if not margin >= 1.0:
        raise InputError(f"margin must be >= 1, got {margin}")
    return min_budget_for_spacing(w.aliasing_bound() / margin, w.d)


@dataclass(frozen=True)
class BudgetRule:
    """How atom budgets map to approximants.

    ``n0`` is the smallest budget a cube may receive; smaller allocations are
    dropped.  ``None`` means ``default_n0(w, margin)``.
    """

    sigma: float = DEFAULT_SIGMA
    n0: int | None = None
    margin: float = DEFAULT_MARGIN
    lattice_cap: int = DEFAULT_LATTICE_CAP

    def __post_init__(self):
        if not self.sigma > 0:
            raise InputError(f"sigma must be positive, got {self.sigma}")
        if self.n0 is not None and self.n0 < 1:
            raise InputError(f"n0 must be positive, got {self.n0}")

    def resolve_n0(self, w: MotherWavelets) -> int:
        n0 = default_n0(w, self.margin) if self.n0 is None else int(self.n0)
        h, _ = choose_h(n0, w.d)
        if not h < w.aliasing_bound():
            raise DomainError(f"n0={n0} gives h={h:g}, not below the aliasing bound {w.aliasing_bound():g}")
        return n0


class AtomCache:
    """Reference-frame atoms keyed by ``(gender, h)``."""

    def __init__(self, w: MotherWavelets, rule: BudgetRule):
        self.w = w
        self.rule = rule
        self._atoms: dict = {}

    def get(self, e: tuple[int, ...], h: float) -> AtomApproximation:
        key = (tuple(e), h)
        if key not in self._atoms:
            self._atoms[key] = truncated_approximant(
                self.w.psi(e), self.rule.sigma, h, gender=e,
                aliasing_bound=self.w.aliasing_bound(), cap=self.rule.lattice_cap,
            )
        return self._atoms[key]

    def __len__(self):
        return len(self._atoms)


def precompute_atoms(w: MotherWavelets, rule: BudgetRule, budgets: Mapping[WaveletIndex, int] | Sequence[int],
                     cache: AtomCache | None = None) -> AtomCache:
    cache = cache or AtomCache(w, rule)
    values = budgets.values() if isinstance(budgets, Mapping) else budgets
    for h in sorted({choose_h(int(n), w.d)[0] for n in values if n > 0}):
        for e in w.genders:
            cache.get(e, h)
    return cache


def atom_on_cube(w: MotherWavelets, idx: WaveletIndex, n_atoms: int, rule: BudgetRule,
                 cache: AtomCache | None = None) -> GaussianSum:
    """Approximant of ``psi_I`` with at most ``n_atoms`` Gaussians, in physical coordinates.

    A budget of 0 gives the empty sum; positive budgets below ``n0`` are rejected.
    """
    if n_atoms <= 0:
        return GaussianSum.empty(w.d)
    n0 = rule.resolve_n0(w)
    if n_atoms < n0:
        raise InputError(f"budget {n_atoms} is below n0={n0}; unfunded cubes must be dropped")
    cache = cache or AtomCache(w, rule)
    atom = cache.get(idx.e, choose_h(int(n_atoms), w.d)[0])
    return map_sum_to_cube(atom.terms, CubeFrame(idx.corner, idx.side))
