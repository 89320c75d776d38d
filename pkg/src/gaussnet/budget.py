"""Smoothness seminorms of coefficient trees and the cost distributions they induce.

Two allocations are provided.  For L_p targets (p < inf) the Triebel-Lizorkin
rule uses the maximal function

    M_{s,q} f(x) = ( sum_{I ni x} |I|^{-sq/d} |f_I|^q )^{1/q}

and its ancestor-only restriction ``m_{s,q,I}``.  For p = inf the Besov rule
uses the per-level energies ``A_j = (sum_{I in D_j} |f_I|^tau)^{1/tau}``.
Both cost maps sum to at most N, and integer budgets are their floors, zeroed
below the threshold N_0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DegenerateInputError, InputError
from .kernel_core import as_points
from .wavelets import CoefficientTree, WaveletIndex, parent_cube

FLOOR_EPS = 1e-12


@dataclass(frozen=True)
class SmoothnessParams:
    """Smoothness ``s``, error norm ``p`` and dimension ``d``; derives ``tau`` and ``q``.

    ``1/tau = 1/p + s/d`` (``1/tau = s/d`` when ``p = inf``) and ``1/q = 1 + s/d``.
    """

    s: float
    p: float
    d: int

    def __post_init__(self):
        if not (self.s > 0 and math.isfinite(self.s)):
            raise InputError(f"smoothness s must be positive and finite, got {self.s}")
        if not self.p >= 1:
            raise InputError(f"norm index p must be in [1, inf], got {self.p}")
        if self.d < 1:
            raise InputError(f"dimension must be positive, got {self.d}")
        if not self.q <= self.tau * (1 + 1e-15):
            raise InputError(f"q={self.q} exceeds tau={self.tau}")
        # |I|^q in the cost equals |I|^(1 - qs/d) in the budget-sum argument
        if abs((1 - self.q * self.s / self.d) - self.q) > 1e-12:
            raise InputError("exponent identity 1 - qs/d = q fails")

    @property
    def besov(self) -> bool:
        return math.isinf(self.p)

    @property
    def tau(self) -> float:
        inv = self.s / self.d if self.besov else 1.0 / self.p + self.s / self.d
        return 1.0 / inv

    @property
    def q(self) -> float:
        return 1.0 / (1.0 + self.s / self.d)


def _cube_weights(t: CoefficientTree, s: float, q: float) -> dict:
    """``w_Q = |Q|^{-sq/d} sum_e |f_{Q,e}|^q`` for every cube in the support."""
    d = t.d
    out = {}
    for (j, k), vals in t.cube_weights.items():
        tot = sum(abs(v) ** q for v in vals)
        if tot > 0:
            out[(j, k)] = (2.0 ** (j * d)) ** (-s * q / d) * tot
    return out


def _ancestor_sums(t: CoefficientTree, s: float, q: float) -> dict:
    """Inclusive ancestor sums ``m_{s,q,Q}^q`` for every cube that carries a coefficient."""
    weights = _cube_weights(t, s, q)
    if not weights:
        return {}
    top = max(j for j, _ in weights)
    memo: dict = {}

    def acc(cube):
        if cube in memo:
            return memo[cube]
        chain = []
        cur = cube
        while cur[0] <= top and cur not in memo:
            chain.append(cur)
            cur = parent_cube(cur)
        base = memo.get(cur, 0.0)
        for c in reversed(chain):
            base += weights.get(c, 0.0)
            memo[c] = base
        # cubes above the top weighted level have no weighted ancestors
        return memo.get(cube, base)

    return {cube: acc(cube) for cube in t.cube_weights}


def partial_maximal(t: CoefficientTree, s: float, q: float, cube: tuple[int, tuple[int, ...]]) -> float:
    """``m_{s,q,I}``: q-th root of the weighted sum over ``I`` and all its ancestors."""
    weights = _cube_weights(t, s, q)
    if not weights:
        return 0.0
    top = max(j for j, _ in weights)
    total = 0.0
    cur = (int(cube[0]), tuple(int(v) for v in cube[1]))
    while cur[0] <= top:
        total += weights.get(cur, 0.0)
        cur = parent_cube(cur)
    return total ** (1.0 / q)


def maximal_function(t: CoefficientTree, s: float, q: float, x) -> np.ndarray:
    """``M_{s,q} f`` at an ``(n, d)`` array of points (direct sum over support cubes)."""
    pts = as_points(x, t.d)
    total = np.zeros(len(pts))
    for (j, k), w in _cube_weights(t, s, q).items():
        side = 2.0**j
        inside = np.all(np.floor(pts / side) == np.asarray(k, dtype=float), axis=1)
        total[inside] += w
    return total ** (1.0 / q)


def tl_seminorm(t: CoefficientTree, s: float, q: float, tau: float) -> float:
    """``|| M_{s,q} f ||_tau`` computed exactly.

    ``M^q`` is constant on each part of a support cube not covered by a finer
    cube that carries (or has descendants carrying) coefficients, so the
    integral is a finite sum over the tree of ancestors.
    """
    d = t.d
    weights = _cube_weights(t, s, q)
    if not weights:
        return 0.0
    top = max(j for j, _ in weights)
    children: dict = {}
    roots = set()
    for cube in weights:
        cur = cube
        while cur[0] < top:
            par = parent_cube(cur)
            kids = children.setdefault(par, set())
            if cur in kids:
                break
            kids.add(cur)
            cur = par
        else:
            roots.add(cur)
    expo = tau / q

    def integrate(cube, above):
        level = above + weights.get(cube, 0.0)
        vol = 2.0 ** (cube[0] * d)
        kids = sorted(children.get(cube, ()))
        own = (vol - len(kids) * vol / 2**d) * level**expo if level > 0 else 0.0
        return own + sum(integrate(c, level) for c in kids)

    total = sum(integrate(r, 0.0) for r in sorted(roots))
    return total ** (1.0 / tau)


def level_energies(t: CoefficientTree, tau: float) -> dict[int, float]:
    out = {}
    for j, idxs in sorted(t.by_level.items()):
        val = sum(abs(t[i]) ** tau for i in idxs)
        if val > 0:
            out[j] = val ** (1.0 / tau)
    return out


def besov_seminorm(t: CoefficientTree, s: float, tau: float | None = None, q: float | None = None):
    """Return ``(|f|_B, {j: A_j})`` with ``|f|_B = (sum_j A_j^q)^(1/q)``."""
    tau = t.d / s if tau is None else tau
    q = 1.0 / (1.0 + s / t.d) if q is None else q
    energies = level_energies(t, tau)
    norm = sum(a**q for a in energies.values()) ** (1.0 / q) if energies else 0.0
    return norm, energies


@dataclass
class CostAllocation:
    kind: str
    N: int
    n0: int
    seminorm: float
    costs: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)

    @property
    def total_cost(self) -> float:
        return math.fsum(self.costs.values())

    @property
    def total_budget(self) -> int:
        return sum(self.budgets.values())

    @property
    def funded(self) -> list[WaveletIndex]:
        return [i for i, n in self.budgets.items() if n > 0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        d = next(iter(self.costs)).d if self.costs else 0
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["j"] + [f"k{i}" for i in range(d)] + [f"e{i}" for i in range(d)] + ["cost", "budget"])
        for idx, c in self.costs.items():
            writer.writerow([idx.j, *idx.k, *idx.e, repr(c), self.budgets[idx]])
        return buf.getvalue()


def fund(costs: Mapping[WaveletIndex, float], n0: int, N: int) -> dict[WaveletIndex, int]:
    """Floor each cost (after a 1e-12 relative nudge) and zero anything below ``n0``."""
    budgets = {}
    for idx, c in costs.items():
        n = int(math.floor(c * (1.0 + FLOOR_EPS)))
        budgets[idx] = n if n >= n0 else 0
    excess = sum(budgets.values()) - N
    if excess > 0:
        # only reachable when rounding pushes the cost sum past N; trim from the finest end
        for idx in reversed(list(budgets)):
            if excess <= 0:
                break
            take = min(excess, budgets[idx])
            budgets[idx] -= take
            excess -= take
            if 0 < budgets[idx] < n0:
                excess -= budgets[idx]
                budgets[idx] = 0
    return budgets


def _check_request(t: CoefficientTree, N: int, n0: int):
    if N < 1:
        raise InputError(f"budget N must be >= 1, got {N}")
    if n0 < 1:
        raise InputError(f"n0 must be >= 1, got {n0}")


def tl_costs(t: CoefficientTree, params: SmoothnessParams, N: int, n0: int = 1) -> CostAllocation:
    """``c_I = |f|_F^{-tau} m_I^{tau-q} |f_I|^q |I|^q N``."""
    _check_request(t, N, n0)
    s, q, tau, d = params.s, params.q, params.tau, t.d
    norm = tl_seminorm(t, s, q, tau)
    if not norm > 0:
        raise DegenerateInputError("tree has zero Triebel-Lizorkin seminorm; nothing to allocate")
    m_q = _ancestor_sums(t, s, q)
    costs = {}
    for idx, v in t.items():
        if v == 0.0:
            costs[idx] = 0.0
            continue
        m = m_q[idx.cube] ** (1.0 / q)
        costs[idx] = norm**-tau * m ** (tau - q) * abs(v) ** q * (2.0 ** (idx.j * d)) ** q * N
    return CostAllocation("TL", N, n0, norm, costs, fund(costs, n0, N))


def besov_costs(t: CoefficientTree, params: SmoothnessParams, N: int, n0: int = 1) -> CostAllocation:
    """``c_I = N |f|_B^{-q} A_j^{q-tau} |f_I|^tau``; these sum to exactly N."""
    _check_request(t, N, n0)
    q, tau = params.q, params.tau
    norm, energies = besov_seminorm(t, params.s, tau, q)
    if not norm > 0:
        raise DegenerateInputError("tree has zero Besov seminorm; nothing to allocate")
    costs = {}
    for idx, v in t.items():
        costs[idx] = 0.0 if v == 0.0 else N * norm**-q * energies[idx.j] ** (q - tau) * abs(v) ** tau
    return CostAllocation("Besov", N, n0, norm, costs, fund(costs, n0, N))


def allocate(t: CoefficientTree, params: SmoothnessParams, N: int, n0: int = 1) -> CostAllocation:
    return besov_costs(t, params, N, n0) if params.besov else tl_costs(t, params, N, n0)
