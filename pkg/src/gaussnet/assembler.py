"""Assembly of the N-term Gaussian approximant ``s_f = sum_I f_I T_{N_I} psi_I``."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .atoms import AtomCache, BudgetRule, atom_on_cube, precompute_atoms
from .budget import CostAllocation, SmoothnessParams, allocate
from .errors import InputError
from .kernel_core import GaussianSum, eval_gaussian_sum
from .wavelets import CoefficientTree, MotherWavelets, synthesize


@dataclass
class ApproximationReport:
    requested: int
    n0: int
    kind: str
    seminorm: float
    funded: int
    terms: int
    budget_used: int
    slack: int
    dropped_mass: float
    funded_by_level: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def to_dict(self, with_timing: bool = False) -> dict:
        out = {
            "requested": self.requested,
            "n0": self.n0,
            "kind": self.kind,
            "seminorm": self.seminorm,
            "funded": self.funded,
            "terms": self.terms,
            "budget_used": self.budget_used,
            "slack": self.slack,
            "dropped_mass": self.dropped_mass,
            "funded_by_level": {str(j): n for j, n in sorted(self.funded_by_level.items())},
        }
        if with_timing:
            out["elapsed"] = self.elapsed
        return out


def approximate(t: CoefficientTree, w: MotherWavelets, params: SmoothnessParams, N: int,
                rule: BudgetRule | None = None, cache: AtomCache | None = None,
                allocation: CostAllocation | None = None) -> tuple[GaussianSum, ApproximationReport]:
    """Allocate ``N`` Gaussians over ``t`` and build the approximant.

    Triebel-Lizorkin costs are used for ``p < inf``, Besov costs for ``p = inf``.
    Unfunded coefficients are dropped and leftover budget is not redistributed.
    """
    start = time.perf_counter()
    rule = rule or BudgetRule()
    if t.d != w.d or params.d != w.d:
        raise InputError("tree, wavelet system and smoothness parameters disagree on d")
    n0 = rule.resolve_n0(w)
    alloc = allocation or allocate(t, params, int(N), n0)
    cache = cache or AtomCache(w, rule)
    precompute_atoms(w, rule, alloc.budgets, cache)

    parts = []
    by_level: dict[int, int] = {}
    dropped = 0.0
    for idx, coef in t.items():
        n_i = alloc.budgets.get(idx, 0)
        if n_i <= 0:
            dropped += abs(coef)
            continue
        parts.append(atom_on_cube(w, idx, n_i, rule, cache).scaled(coef))
        by_level[idx.j] = by_level.get(idx.j, 0) + 1
    s = GaussianSum.concatenate(w.d, parts)
    used = alloc.total_budget
    report = ApproximationReport(
        requested=int(N),
        n0=n0,
        kind=alloc.kind,
        seminorm=alloc.seminorm,
        funded=sum(by_level.values()),
        terms=len(s),
        budget_used=used,
        slack=int(N) - used,
        dropped_mass=dropped,
        funded_by_level=by_level,
        elapsed=time.perf_counter() - start,
    )
    assert report.terms <= report.requested, "hard budget violated"
    return s, report


def residual(t: CoefficientTree, w: MotherWavelets, s: GaussianSum, x) -> np.ndarray | float:
    """``sum_I f_I psi_I(x) - s(x)``."""
    return synthesize(t, w, x) - eval_gaussian_sum(s, x)
