"""Meyer-type tensor wavelets: construction, indexing, analysis and synthesis.

Wavelets are indexed by a dyadic cube ``I = 2^j (k + [0,1]^d)`` and a gender
``e in {0,1}^d \\ {0}``; ``psi_I(x) = psi_e((x - 2^j k) / 2^j)`` is *not*
L2-normalized, so the expansion ``f = sum_I f_I psi_I`` has
``f_I = |I|^-1 <f, psi_I>``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse
from scipy.interpolate import make_interp_spline
from scipy.special import comb

from .errors import InputError, NumericError, ResourceError
from .kernel_core import CubeFrame, as_points, is_single_point
from .spectral import SpectralFunction, axis_grid, default_resolution, eval_physical, eval_uniform_1d

TWO_PI_3 = 2.0 * math.pi / 3.0
SCALING_BAND = 4.0 * math.pi / 3.0
WAVELET_BAND = 8.0 * math.pi / 3.0

# Pointwise evaluation interpolates a quintic spline through exact values on
# [-TABLE_REACH, TABLE_REACH + 1] (error ~1e-14); outside it the generators are
# taken as zero.  With the default profile the tails are below 1e-9 there.
TABLE_REACH = 128.0
TABLE_STEP = 2.0**-8

# Contact order 3 is the classical C^3 Meyer profile; psi then decays like |x|^-5.
# Higher orders give faster asymptotic decay but heavier tails at moderate |x|.
DEFAULT_CONTACT = 3


def smoothstep(t, contact: int = DEFAULT_CONTACT):
    """Polynomial ramp from 0 to 1 on [0, 1] with derivatives 1..contact vanishing at both ends.

    ``contact=3`` is the classical ``t^4 (35 - 84t + 70t^2 - 20t^3)``.
    Satisfies ``nu(t) + nu(1 - t) = 1``, which orthonormality needs.
    """
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    n = contact
    poly = sum(comb(n + k, k, exact=True) * comb(2 * n + 1, n - k, exact=True) * (-t) ** k for k in range(n + 1))
    return t ** (n + 1) * poly


def scaling_profile(xi, contact: int = DEFAULT_CONTACT) -> np.ndarray:
    a = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(a)
    out[a <= TWO_PI_3] = 1.0
    mid = (a > TWO_PI_3) & (a < SCALING_BAND)
    out[mid] = np.cos(0.5 * math.pi * smoothstep(3.0 * a[mid] / (2.0 * math.pi) - 1.0, contact))
    return out


def wavelet_profile(xi, contact: int = DEFAULT_CONTACT) -> np.ndarray:
    """``|eta1_hat|``; the full transform carries the phase ``e^{-i xi / 2}``."""
    a = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(a)
    inner = (a >= TWO_PI_3) & (a <= SCALING_BAND)
    out[inner] = np.sin(0.5 * math.pi * smoothstep(3.0 * a[inner] / (2.0 * math.pi) - 1.0, contact))
    outer = (a > SCALING_BAND) & (a < WAVELET_BAND)
    out[outer] = np.cos(0.5 * math.pi * smoothstep(3.0 * a[outer] / (4.0 * math.pi) - 1.0, contact))
    return out


def genders(d: int) -> list[tuple[int, ...]]:
    return [e for e in itertools.product((0, 1), repeat=d) if any(e)]


@dataclass(frozen=True, order=True)
class WaveletIndex:
    j: int
    k: tuple[int, ...]
    e: tuple[int, ...]

    def __post_init__(self):
        if len(self.k) != len(self.e):
            raise InputError("offset and gender dimensions differ")
        if not any(self.e) or any(v not in (0, 1) for v in self.e):
            raise InputError(f"gender must be a nonzero 0/1 vector, got {self.e}")

    @property
    def d(self) -> int:
        return len(self.k)

    @property
    def side(self) -> float:
        return 2.0**self.j

    @property
    def corner(self) -> tuple[float, ...]:
        return tuple(self.side * v for v in self.k)

    @property
    def volume(self) -> float:
        return self.side**self.d

    @property
    def cube(self) -> tuple[int, tuple[int, ...]]:
        return (self.j, self.k)

    @property
    def frame(self) -> CubeFrame:
        return CubeFrame(self.corner, self.side)

    def sort_key(self):
        """Funding and term order: coarse levels first, then offset, then gender."""
        return (-self.j, self.k, self.e)


def parent_cube(cube: tuple[int, tuple[int, ...]]) -> tuple[int, tuple[int, ...]]:
    j, k = cube
    return (j + 1, tuple(v >> 1 for v in k))


class CoefficientTree:
    """Finitely supported map ``WaveletIndex -> f_I``."""

    def __init__(self, d: int, coefficients: Mapping[WaveletIndex, float] | None = None,
                 level_range: tuple[int, int] | None = None):
        self.d = int(d)
        items = {}
        for idx, val in (coefficients or {}).items():
            if idx.d != self.d:
                raise InputError(f"index {idx} has dimension {idx.d}, tree has {self.d}")
            items[idx] = float(val)
        self._coef = dict(sorted(items.items(), key=lambda kv: kv[0].sort_key()))
        levels = [idx.j for idx in self._coef]
        if level_range is None:
            level_range = (min(levels), max(levels)) if levels else (0, 0)
        if levels and (min(levels) < level_range[0] or max(levels) > level_range[1]):
            raise InputError(f"levels {min(levels)}..{max(levels)} outside declared range {level_range}")
        self.level_range = tuple(level_range)

    def __len__(self):
        return len(self._coef)

    def __iter__(self):
        return iter(self._coef)

    def __getitem__(self, idx: WaveletIndex) -> float:
        return self._coef.get(idx, 0.0)

    def __contains__(self, idx) -> bool:
        return idx in self._coef

    def items(self):
        return self._coef.items()

    def nonzero(self) -> "CoefficientTree":
        return CoefficientTree(self.d, {i: v for i, v in self._coef.items() if v != 0.0}, self.level_range)

    def scaled(self, factor: float) -> "CoefficientTree":
        return CoefficientTree(self.d, {i: v * factor for i, v in self._coef.items()}, self.level_range)

    @cached_property
    def by_level(self) -> dict[int, list[WaveletIndex]]:
        out: dict[int, list[WaveletIndex]] = {}
        for idx in self._coef:
            out.setdefault(idx.j, []).append(idx)
        return out

    @cached_property
    def cube_weights(self) -> dict:
        """Coefficients grouped by cube: ``{(j, k): [f_I over genders]}``."""
        out: dict = {}
        for idx, v in self._coef.items():
            out.setdefault(idx.cube, []).append(v)
        return out

    def __eq__(self, other):
        if not isinstance(other, CoefficientTree):
            return NotImplemented
        return self.d == other.d and self._coef == other._coef

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "entries": [
                {"j": i.j, "k": list(i.k), "e": list(i.e), "f": v} for i, v in self._coef.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "CoefficientTree":
        try:
            d = int(data["d"])
            coef = {}
            for ent in data["entries"]:
                idx = WaveletIndex(int(ent["j"]), tuple(int(v) for v in ent["k"]), tuple(int(v) for v in ent["e"]))
                coef[idx] = float(ent["f"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed CoefficientTree document: {exc}") from exc
        return cls(d, coef)


@dataclass(frozen=True, eq=False)
class MotherWavelets:
    d: int
    M: int
    contact: int
    eta0: SpectralFunction = field(repr=False)
    eta1: SpectralFunction = field(repr=False)

    @property
    def genders(self) -> list[tuple[int, ...]]:
        return genders(self.d)

    @property
    def ball_radius(self) -> float:
        return WAVELET_BAND * math.sqrt(self.d)

    @cached_property
    def _psi_cache(self) -> dict:
        return {}

    def psi(self, e: Sequence[int]) -> SpectralFunction:
        """The d-variate generator ``psi_e`` as a spectral function on ``B(0, (8pi/3) sqrt d)``."""
        e = tuple(e)
        if e not in self.genders:
            raise InputError(f"gender {e} not valid for d={self.d}")
        if e not in self._psi_cache:
            R = self.ball_radius
            ax = axis_grid(R, self.M)
            factors = [_eta_hat(ei, ax, self.contact) for ei in e]
            vals = factors[0]
            for fac in factors[1:]:
                vals = np.multiply.outer(vals, fac)
            self._psi_cache[e] = SpectralFunction(self.d, R, self.M, vals)
        return self._psi_cache[e]

    def eta(self, which: int) -> SpectralFunction:
        return self.eta1 if which else self.eta0

    @cached_property
    def _tables(self):
        n_lo, n_hi = int(-TABLE_REACH / TABLE_STEP), int((TABLE_REACH + 1.0) / TABLE_STEP)
        y = np.arange(n_lo, n_hi + 1) * TABLE_STEP
        return tuple(
            make_interp_spline(y, eval_uniform_1d(self.eta(i), TABLE_STEP, n_lo, n_hi), k=5) for i in (0, 1)
        )

    def eta_values(self, which: int, y) -> np.ndarray:
        """Univariate generator values at ``y`` via the spline table."""
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        inside = (y >= -TABLE_REACH) & (y <= TABLE_REACH + 1.0)
        out[inside] = self._tables[which](y[inside])
        return out

    def aliasing_bound(self) -> float:
        """Largest admissible lattice spacing for every generator (per-axis band 8pi/3)."""
        return math.pi / WAVELET_BAND


def _eta_hat(which: int, xi: np.ndarray, contact: int) -> np.ndarray:
    if which == 0:
        return scaling_profile(xi, contact).astype(complex)
    return wavelet_profile(xi, contact) * np.exp(-0.5j * xi)


@lru_cache(maxsize=8)
def build_meyer(d: int, M: int | None = None, contact: int = DEFAULT_CONTACT, M1: int = 1024) -> MotherWavelets:
    """Build the Meyer tensor system in dimension ``d``.

    ``M`` is the per-axis resolution of the d-variate generators, ``M1`` that of
    the univariate ``eta0``/``eta1`` used for pointwise evaluation.
    """
    if d not in (1, 2, 3):
        raise InputError(f"unsupported dimension d={d}; expected 1, 2 or 3")
    M = M or default_resolution(d)
    eta0 = SpectralFunction.from_callable(lambda x: _eta_hat(0, x[..., 0], contact), 1, WAVELET_BAND, M1)
    eta1 = SpectralFunction.from_callable(lambda x: _eta_hat(1, x[..., 0], contact), 1, WAVELET_BAND, M1)
    return MotherWavelets(d, M, contact, eta0, eta1)


def _eval_factorized(w: MotherWavelets, e: Sequence[int], y: np.ndarray) -> np.ndarray:
    """``prod_i eta_{e_i}(y_i)`` for ``y`` of shape (..., d)."""
    shape = y.shape[:-1]
    out = np.ones(shape)
    for axis, ei in enumerate(e):
        out = out * w.eta_values(ei, y[..., axis])
    return out


def eval_wavelet(w: MotherWavelets, idx: WaveletIndex, x) -> np.ndarray | float:
    """``psi_e((x - c(I)) / l(I))`` at a point or an ``(n, d)`` array."""
    scalar = is_single_point(x, w.d)
    pts = as_points(x, w.d)
    y = (pts - np.asarray(idx.corner)) / idx.side
    out = _eval_factorized(w, idx.e, y)
    return float(out[0]) if scalar else out


def synthesize(tree: CoefficientTree, w: MotherWavelets, x) -> np.ndarray | float:
    """``sum_I f_I psi_I(x)``, grouped by (level, gender) and summed in index order."""
    scalar = is_single_point(x, w.d)
    pts = as_points(x, w.d)
    out = np.zeros(len(pts))
    groups: dict = {}
    for idx, v in tree.items():
        groups.setdefault((idx.j, idx.e), []).append((idx.k, v))
    chunk = max(1, (1 << 21) // max(1, len(pts)))
    for (j, e), members in groups.items():
        side = 2.0**j
        for lo in range(0, len(members), chunk):
            part = members[lo : lo + chunk]
            ks = np.array([m[0] for m in part], dtype=float)
            coefs = np.array([m[1] for m in part])
            y = pts[None, :, :] / side - ks[:, None, :]
            out += coefs @ _eval_factorized(w, e, y)
    return float(out[0]) if scalar else out


@dataclass
class AnalysisReport:
    levels: tuple[int, int]
    pad_cubes: float
    support: tuple
    max_change: float = 0.0
    refinements: dict = field(default_factory=dict)
    nodes: dict = field(default_factory=dict)
    count: int = 0

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "pad_cubes": self.pad_cubes,
            "support": [list(b) for b in self.support],
            "max_change": self.max_change,
            "refinements": {str(k): v for k, v in self.refinements.items()},
            "nodes": {str(k): v for k, v in self.nodes.items()},
            "count": self.count,
        }


def _gl_nodes(edges: np.ndarray, order: int):
    x, wts = leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wts[None, :]).ravel()
    return nodes, weights


def _legendre_tail(order: int) -> np.ndarray:
    """Rows mapping Gauss-Legendre samples to the two highest Legendre coefficients."""
    x, wts = leggauss(order)
    rows = []
    for n in (order - 2, order - 1):
        c = np.zeros(n + 1)
        c[n] = 1.0
        rows.append((2 * n + 1) / 2 * wts * np.polynomial.legendre.legval(x, c))
    return np.array(rows)


def _axis_entries(w: "MotherWavelets", which: int, x: np.ndarray, wx: np.ndarray, side: float, ks: np.ndarray):
    """COO triplets of ``wx * eta(x / side - k) / side`` within the generator's table reach."""
    lo_k, hi_k = int(ks[0]), int(ks[-1])
    y0 = x / side
    first = np.maximum(np.ceil(y0 - TABLE_REACH - 1.0).astype(np.int64), lo_k)
    last = np.minimum(np.floor(y0 + TABLE_REACH).astype(np.int64), hi_k)
    width = int(np.max(last - first, initial=-1)) + 1
    if width <= 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    K = first[:, None] + np.arange(width)[None, :]
    keep = K <= last[:, None]
    cols = np.broadcast_to(np.arange(len(x))[:, None], K.shape)[keep]
    K = K[keep]
    # spline evaluation is much faster on monotone runs: order by (k, node)
    order = np.argsort(K, kind="stable")
    cols, K = cols[order], K[order]
    vals = (wx / side)[cols] * w.eta_values(which, y0[cols] - K)
    return K - lo_k, cols, vals


class _AxisMatrices:
    """Per-axis quadrature matrices for one level, cached panel by panel across refinements."""

    def __init__(self, w: "MotherWavelets", side: float, ks: np.ndarray, order: int):
        self.w, self.side, self.ks, self.order = w, side, ks, order
        self.blocks: dict = {}

    def build(self, edges: np.ndarray) -> list:
        keys = list(zip(edges[:-1].tolist(), edges[1:].tolist()))
        fresh = [i for i, key in enumerate(keys) if key not in self.blocks]
        if fresh:
            x, wx = _gl_nodes(edges, self.order)
            idx = (np.asarray(fresh)[:, None] * self.order + np.arange(self.order)[None, :]).ravel()
            parts = [_axis_entries(self.w, which, x[idx], wx[idx], self.side, self.ks) for which in (0, 1)]
            for which, (rows, cols, vals) in enumerate(parts):
                panel = cols // self.order
                srt = np.argsort(panel, kind="stable")
                rows, cols, vals, panel = rows[srt], cols[srt], vals[srt], panel[srt]
                cut = np.searchsorted(panel, np.arange(len(fresh) + 1))
                for n, i in enumerate(fresh):
                    sl = slice(cut[n], cut[n + 1])
                    self.blocks.setdefault(keys[i], [None, None])[which] = (rows[sl], cols[sl] % self.order, vals[sl])
        out = []
        for which in (0, 1):
            rows = [self.blocks[key][which][0] for key in keys]
            cols = [self.blocks[key][which][1] + p * self.order for p, key in enumerate(keys)]
            vals = [self.blocks[key][which][2] for key in keys]
            out.append(sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                         shape=(len(self.ks), len(keys) * self.order)))
        return out


def _contract(F: np.ndarray, mats: list) -> np.ndarray:
    """Apply ``mats[a]`` (K_a x n_a, dense or sparse) along every axis ``a`` of ``F``."""
    out = F
    for axis, m in enumerate(mats):
        moved = np.moveaxis(out, axis, 0)
        flat = m @ moved.reshape(moved.shape[0], -1)
        out = np.moveaxis(np.asarray(flat).reshape((m.shape[0],) + moved.shape[1:]), 0, axis)
    return out


def _split_panels(edges: np.ndarray, F: np.ndarray, axis: int, tail: np.ndarray, side: float,
                  threshold: float) -> np.ndarray:
    """Halve the panels along ``axis`` whose Legendre tail of ``F`` exceeds ``threshold``; all if none does."""
    order = tail.shape[1]
    moved = np.moveaxis(F, axis, 0)
    blocks = moved.reshape(len(edges) - 1, order, -1)
    coeffs = np.einsum("ro,pox->prx", tail, blocks)
    size = np.abs(coeffs).sum(axis=1).max(axis=1) if coeffs.size else np.zeros(len(edges) - 1)
    # error in a coefficient from panel p scales like (half width) * tail / side
    flagged = 0.5 * np.diff(edges) * size / side > threshold
    if not flagged.any():
        flagged[:] = True
    mids = 0.5 * (edges[:-1] + edges[1:])[flagged]
    return np.sort(np.concatenate([edges, mids]))


def analyze(f: Callable[[np.ndarray], np.ndarray], w: MotherWavelets, levels: tuple[int, int],
            box: Sequence[tuple[float, float]], *, pad_cubes: float = 8.0, pad_cap: float = 1.0,
            tol: float = 1e-9, order: int = 8, max_refine: int = 40, drop_below: float = 0.0,
            max_nodes: int = 1 << 23, max_entries: int = 1 << 26) -> tuple[CoefficientTree, AnalysisReport]:
    """Wavelet coefficients ``f_I = |I|^-1 <f, psi_I>`` for cubes at ``levels`` meeting the padded box.

    At level ``j`` the cubes kept are those meeting ``box`` padded by
    ``pad_cubes * 2^j``.  The inner products are integrated over ``box`` padded
    by ``pad_cubes * min(2^j, pad_cap)``, outside which ``f`` is taken to vanish,
    using tensor composite Gauss-Legendre panels of initial width
    ``min(2^j, pad_cap) / 2``.  Panels whose highest Legendre coefficients of
    ``f`` suggest an unresolved feature are halved (all panels if none is
    flagged) until the level's coefficients change by less than ``tol`` times
    the sampled sup of ``f``.  ``f`` receives an ``(n, d)`` array.
    """
    d = w.d
    jmin, jmax = levels
    if jmin > jmax:
        raise InputError(f"empty level range {levels}")
    if len(box) != d:
        raise InputError("domain box dimension does not match wavelet dimension")
    gens = w.genders
    tail = _legendre_tail(order)
    coef: dict[WaveletIndex, float] = {}
    report = AnalysisReport((jmin, jmax), pad_cubes, tuple(tuple(b) for b in box))

    for j in range(jmax, jmin - 1, -1):
        side = 2.0**j
        reach = pad_cubes * min(side, pad_cap)
        ks_axes = [
            np.arange(math.floor((lo - pad_cubes * side) / side), math.ceil((hi + pad_cubes * side) / side))
            for lo, hi in box
        ]
        panel = 0.5 * min(side, pad_cap)
        edges = [np.linspace(lo - reach, hi + reach, max(1, int(math.ceil((hi - lo + 2 * reach) / panel))) + 1)
                 for lo, hi in box]
        caches = [_AxisMatrices(w, side, ks, order) for ks in ks_axes]
        prev = None
        change = math.inf
        for refine in range(max_refine + 1):
            axes = [_gl_nodes(e, order) for e in edges]
            total = math.prod(len(a[0]) for a in axes)
            entries = sum(len(a[0]) * min(len(ks), int(2 * TABLE_REACH) + 2) for a, ks in zip(axes, ks_axes))
            if total > max_nodes:
                raise NumericError(
                    f"quadrature at level {j} needs {total} nodes (cap {max_nodes}); "
                    f"last change {change:.3e} after {refine} refinements"
                )
            if entries > max_entries:
                raise ResourceError(
                    f"quadrature at level {j} needs ~{entries} matrix entries (cap {max_entries}); "
                    f"last change {change:.3e} after {refine} refinements"
                )
            mats = [cache.build(e) for cache, e in zip(caches, edges)]
            grid = np.stack(np.meshgrid(*[a[0] for a in axes], indexing="ij"), axis=-1).reshape(-1, d)
            F = np.asarray(f(grid), dtype=float).reshape([len(a[0]) for a in axes])
            fscale = float(np.max(np.abs(F))) if F.size else 0.0
            est = np.stack([_contract(F, [mats[a][e[a]] for a in range(d)]) for e in gens], axis=-1)
            if prev is not None:
                change = float(np.max(np.abs(est - prev))) if est.size else 0.0
                if change <= tol * max(fscale, 1e-300):
                    break
            prev = est
            edges = [_split_panels(e, F, axis, tail, side, 0.25 * tol * max(fscale, 1e-300))
                     for axis, e in enumerate(edges)]
        else:
            raise NumericError(
                f"quadrature at level {j} did not converge after {max_refine} refinements "
                f"(last change {change:.3e}, f scale {fscale:.3e})"
            )
        report.refinements[j] = refine
        report.nodes[j] = total
        report.max_change = max(report.max_change, change / max(fscale, 1e-300))
        for pos in np.ndindex(*est.shape[:-1]):
            k = tuple(int(ks_axes[a][pos[a]]) for a in range(d))
            for gi, e in enumerate(gens):
                val = float(est[pos + (gi,)])
                if abs(val) > drop_below:
                    coef[WaveletIndex(j, k, e)] = val
    report.count = len(coef)
    return CoefficientTree(d, coef, (jmin, jmax)), report
