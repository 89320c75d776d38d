"""Error measurement, operator sweeps and convergence-rate studies."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assembler import approximate
from .atoms import AtomCache, BudgetRule, DEFAULT_SIGMA, full_approximant, truncated_approximant
from .budget import SmoothnessParams
from .errors import DomainError, InputError, StudyError
from .kernel_core import eval_gaussian_sum
from .wavelets import CoefficientTree, MotherWavelets, WaveletIndex, build_meyer, genders, synthesize


@dataclass(frozen=True)
class ErrorGrid:
    """Tensor grid of ``resolution[i]`` nodes per axis over ``box``."""

    box: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    p: float = 2.0

    def __post_init__(self):
        if len(self.box) != len(self.resolution):
            raise InputError("box and resolution dimensions differ")
        if any(r < 64 for r in self.resolution):
            raise InputError(f"need at least 64 nodes per axis, got {self.resolution}")
        if any(not hi > lo for lo, hi in self.box):
            raise InputError(f"degenerate box {self.box}")
        if not self.p >= 1:
            raise InputError(f"norm index must be in [1, inf], got {self.p}")

    @property
    def d(self) -> int:
        return len(self.box)

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in self.box)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.box, self.resolution)]

    def nodes(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1).reshape(-1, self.d)

    def weights(self) -> np.ndarray:
        """Composite trapezoid weights matching ``nodes()``."""
        out = np.ones(1)
        for (lo, hi), n in zip(self.box, self.resolution):
            w = np.full(n, (hi - lo) / (n - 1))
            w[[0, -1]] *= 0.5
            out = np.multiply.outer(out, w).ravel()
        return out

    def with_p(self, p: float) -> "ErrorGrid":
        return ErrorGrid(self.box, self.resolution, p)

    def refined(self, factor: int = 2) -> "ErrorGrid":
        return ErrorGrid(self.box, tuple((n - 1) * factor + 1 for n in self.resolution), self.p)


def grid_for_tree(t: CoefficientTree, p: float = 2.0, pad_cubes: float = 8.0, per_cube: int = 16,
                  max_nodes: int = 1 << 22) -> ErrorGrid:
    """Box around the tree's cubes padded by ``pad_cubes`` of the largest side; step ``l_min / per_cube``."""
    if not len(t):
        raise InputError("cannot size an error grid for an empty tree")
    sides = [i.side for i in t]
    lmin, lmax = min(sides), max(sides)
    box = []
    for axis in range(t.d):
        lo = min(i.corner[axis] for i in t) - pad_cubes * lmax
        hi = max(i.corner[axis] + i.side for i in t) + pad_cubes * lmax
        box.append((lo, hi))
    step = lmin / per_cube
    res = [max(64, int(math.ceil((hi - lo) / step)) + 1) for lo, hi in box]
    while math.prod(res) > max_nodes:
        res = [max(64, (n + 1) // 2) for n in res]
    return ErrorGrid(tuple(box), tuple(res), p)


def norm_on_grid(values: np.ndarray, grid: ErrorGrid, p: float | None = None) -> float:
    p = grid.p if p is None else p
    a = np.abs(values)
    if math.isinf(p):
        return float(np.max(a)) if a.size else 0.0
    return float(np.dot(grid.weights(), a**p) ** (1.0 / p))


def lp_error(t: CoefficientTree, w: MotherWavelets, s, grid: ErrorGrid, target: np.ndarray | None = None) -> float:
    """``||f - s||_p`` on the grid; ``target`` may carry precomputed synthesis values."""
    x = grid.nodes()
    f = synthesize(t, w, x) if target is None else target
    return norm_on_grid(f - eval_gaussian_sum(s, x), grid)


@dataclass
class SweepResult:
    kind: str
    h: list[float]
    errors: list[float]
    metric: list[float]
    k: float
    sigma: float

    @property
    def fitted_slope(self) -> float:
        return float(np.polyfit(np.log(self.h), np.log(self.metric), 1)[0])

    def step_slopes(self) -> list[float]:
        """``log(err_i / err_{i+1}) / log(h_i / h_{i+1})`` for consecutive sweep points."""
        e, h = self.errors, self.h
        return [math.log(e[i] / e[i + 1]) / math.log(h[i] / h[i + 1]) for i in range(len(h) - 1)]

    @property
    def spread(self) -> float:
        return max(self.metric) / min(self.metric)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k, "sigma": self.sigma, "h": self.h,
                "errors": self.errors, "metric": self.metric}


def operator_bound_sweep(kind: str, hs: Sequence[float], k: float = 4.0, *, w: MotherWavelets | None = None,
                         sigma: float = DEFAULT_SIGMA, window: float = 20.0, nodes_per_unit: int = 100,
                         allow_aliasing: bool = False) -> SweepResult:
    """Sup-norm errors of the lattice approximants of the univariate Meyer wavelet.

    ``full`` and ``truncated`` measure ``max |psi - approx|`` on ``[-window, window]``;
    ``localized`` measures ``max |err(x)| (1 + |x|)^k / h^k`` on ``|x| <= 4/h``.
    """
    if kind not in ("full", "truncated", "localized"):
        raise InputError(f"unknown sweep kind {kind!r}")
    w = w or build_meyer(1)
    f = w.psi((1,))
    bound = w.aliasing_bound()
    errors, metric = [], []
    for h in hs:
        if not allow_aliasing and not h < bound:
            raise DomainError(f"h={h:g} is in the aliasing regime (bound {bound:g})")
        half = 4.0 / h if kind == "localized" else window
        x = np.linspace(-half, half, int(2 * half * nodes_per_unit) + 1)
        ref = w.eta_values(1, x)
        if kind == "full":
            approx = full_approximant(f, sigma, h, [(-half, half)], check_aliasing=False)
        else:
            approx = truncated_approximant(f, sigma, h, check_aliasing=False).terms
        err = np.abs(eval_gaussian_sum(approx, x[:, None]) - ref)
        errors.append(float(err.max()))
        if kind == "localized":
            metric.append(float(np.max(err * (1 + np.abs(x)) ** k) / h**k))
        else:
            metric.append(float(err.max()))
    return SweepResult(kind, list(map(float, hs)), errors, metric, k, sigma)


@dataclass
class RateFit:
    N: list[int]
    terms: list[int]
    errors: list[float]
    seminorm: float
    s: float
    d: int
    slope: float = float("nan")
    intercept: float = float("nan")
    residual: float = float("nan")
    excluded: list[int] = field(default_factory=list)

    @property
    def ratios(self) -> list[float]:
        """Empirical constants ``error / (seminorm N^{-s/d})``."""
        return [e / (self.seminorm * n ** (-self.s / self.d)) for n, e in zip(self.N, self.errors)]

    def fit(self) -> "RateFit":
        if len(self.N) < 4:
            raise StudyError(f"need at least 4 usable budgets, have {len(self.N)}")
        if any(not e > 0 for e in self.errors):
            raise StudyError("rate fit needs strictly positive errors")
        x, y = np.log(self.N), np.log(self.errors)
        self.slope, self.intercept = (float(v) for v in np.polyfit(x, y, 1))
        self.residual = float(np.sqrt(np.mean((y - (self.slope * x + self.intercept)) ** 2)))
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["N", "terms", "error", "seminorm", "ratio"])
        for row in zip(self.N, self.terms, self.errors, [self.seminorm] * len(self.N), self.ratios):
            wr.writerow([row[0], row[1], repr(row[2]), repr(row[3]), repr(row[4])])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "target_slope": -self.s / self.d,
            "seminorm": self.seminorm,
            "N": self.N,
            "errors": self.errors,
            "excluded": self.excluded,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def rate_study(t: CoefficientTree, w: MotherWavelets, params: SmoothnessParams, Ns: Sequence[int],
               grid: ErrorGrid | None = None, rule: BudgetRule | None = None) -> RateFit:
    """Approximate ``t`` for each budget, measure the error in ``L_p`` and fit ``log err`` vs ``log N``.

    Budgets that fund nothing are excluded with a warning.
    """
    Ns = [int(n) for n in Ns]
    if len(Ns) < 4:
        raise StudyError(f"need at least 4 budgets, got {len(Ns)}")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise StudyError("budgets must be strictly increasing")
    rule = rule or BudgetRule()
    grid = (grid or grid_for_tree(t)).with_p(params.p)
    target = synthesize(t, w, grid.nodes())
    cache = AtomCache(w, rule)
    fit = RateFit([], [], [], 0.0, params.s, params.d)
    for n in Ns:
        s, rep = approximate(t, w, params, n, rule, cache)
        fit.seminorm = rep.seminorm
        if rep.funded == 0:
            warnings.warn(f"N={n} funds no wavelet (n0={rep.n0}); excluded from the fit", stacklevel=2)
            fit.excluded.append(n)
            continue
        fit.N.append(n)
        fit.terms.append(rep.terms)
        fit.errors.append(lp_error(t, w, s, grid, target))
    return fit.fit()


def make_synthetic_tree(d: int, s: float, levels: tuple[int, int] = (-5, 0), per_level: int = 2,
                        seed: int = 0, center: Sequence[float] | None = None) -> CoefficientTree:
    """Tree with ``per_level`` cubes per level nearest ``center``, all genders, and
    ``|f_I| = |I|^{s/d + 1/2} u_I`` with ``u_I ~ U[1/2, 1]`` and alternating signs.
    """
    if per_level < 1:
        raise InputError("per_level must be positive")
    jmin, jmax = levels
    if jmin > jmax:
        raise InputError(f"empty level range {levels}")
    c = np.full(d, 0.3) if center is None else np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    coef = {}
    sign = 1.0
    reach = int(math.ceil(per_level ** (1.0 / d))) + 1
    for j in range(jmax, jmin - 1, -1):
        side = 2.0**j
        base = np.floor(c / side).astype(int)
        offsets = np.stack(np.meshgrid(*([np.arange(-reach, reach + 1)] * d), indexing="ij"), -1).reshape(-1, d)
        ks = base + offsets
        dist = np.linalg.norm((ks + 0.5) * side - c, axis=1)
        order = sorted(range(len(ks)), key=lambda i: (dist[i], tuple(ks[i])))[:per_level]
        for i in sorted(order, key=lambda i: tuple(ks[i])):
            k = tuple(int(v) for v in ks[i])
            for e in genders(d):
                mag = (side**d) ** (s / d + 0.5) * rng.uniform(0.5, 1.0)
                coef[WaveletIndex(j, k, e)] = sign * mag
                sign = -sign
    return CoefficientTree(d, coef, levels)


def single_wavelet_tree(d: int, j: int = 0, k: Sequence[int] | None = None, e: Sequence[int] | None = None,
                        value: float = 1.0) -> CoefficientTree:
    k = tuple(k) if k is not None else (0,) * d
    e = tuple(e) if e is not None else (1,) + (0,) * (d - 1)
    return CoefficientTree(d, {WaveletIndex(j, k, e): value}, (j, j))
