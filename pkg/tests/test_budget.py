import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussnet.budget import (
    SmoothnessParams,
    allocate,
    besov_costs,
    besov_seminorm,
    fund,
    maximal_function,
    partial_maximal,
    tl_costs,
    tl_seminorm,
)
from gaussnet.errors import DegenerateInputError, InputError
from gaussnet.harness import make_synthetic_tree
from gaussnet.wavelets import CoefficientTree, WaveletIndex

from oracles import besov_seminorm_enum, random_tree, tl_seminorm_grid

UNIT = WaveletIndex(0, (0,), (1,))
seeds = st.integers(0, 2**32 - 1)
smooth = st.sampled_from([0.5, 1.0, 2.0, 3.0])
norms = st.sampled_from([1.0, 2.0, 4.0, math.inf])


def test_params_derivations():
    p = SmoothnessParams(1.0, 2.0, 1)
    assert p.tau == pytest.approx(2 / 3) and p.q == pytest.approx(0.5)
    b = SmoothnessParams(2.0, math.inf, 1)
    assert b.besov and b.tau == pytest.approx(0.5) and b.q == pytest.approx(1 / 3)
    # tau need not lie in (0, 1]
    assert SmoothnessParams(1.0, 2.0, 2).tau == pytest.approx(1.0)
    assert SmoothnessParams(0.5, 2.0, 2).tau > 1
    with pytest.raises(InputError):
        SmoothnessParams(0.0, 2.0, 1)
    with pytest.raises(InputError):
        SmoothnessParams(1.0, 0.5, 1)


def test_partial_maximal_examples():
    assert partial_maximal(CoefficientTree(1), 1.0, 0.5, (0, (0,))) == 0.0
    t = CoefficientTree(1, {UNIT: 1.0})
    assert partial_maximal(t, 1.0, 0.5, (0, (0,))) == 1.0
    assert partial_maximal(t, 1.0, 0.5, (-3, (2,))) == 1.0
    assert partial_maximal(t, 1.0, 0.5, (-3, (8,))) == 0.0


def test_single_entry_seminorms_and_costs():
    t = CoefficientTree(1, {UNIT: 1.0})
    p = SmoothnessParams(1.0, 2.0, 1)
    assert tl_seminorm(t, p.s, p.q, p.tau) == pytest.approx(1.0, rel=1e-15)
    alloc = tl_costs(t, p, 100, 10)
    assert alloc.costs[UNIT] == pytest.approx(100, rel=1e-14)
    assert alloc.budgets[UNIT] == 100
    norm, energies = besov_seminorm(t, 1.0)
    assert norm == 1.0 and energies == {0: 1.0}
    b = besov_costs(t, SmoothnessParams(1.0, math.inf, 1), 100, 10)
    assert b.costs[UNIT] == pytest.approx(100, rel=1e-14) and b.budgets[UNIT] == 100


def test_besov_energy_tau_one():
    t = CoefficientTree(1, {UNIT: 0.3, WaveletIndex(0, (5,), (1,)): -0.7})
    _, energies = besov_seminorm(t, 1.0)
    assert energies[0] == pytest.approx(1.0, rel=1e-15)


def test_degenerate_trees():
    p = SmoothnessParams(1.0, 2.0, 1)
    with pytest.raises(DegenerateInputError):
        tl_costs(CoefficientTree(1), p, 100)
    with pytest.raises(DegenerateInputError):
        besov_costs(CoefficientTree(1, {UNIT: 0.0}), SmoothnessParams(1.0, math.inf, 1), 100)
    with pytest.raises(InputError):
        tl_costs(CoefficientTree(1, {UNIT: 1.0}), p, 0)


def test_floor_rule_below_n0():
    t = CoefficientTree(1, {UNIT: 1.0})
    alloc = tl_costs(t, SmoothnessParams(1.0, 2.0, 1), 30, 35)
    assert alloc.budgets[UNIT] == 0 and alloc.funded == []


def test_fund_trims_overshoot():
    costs = {WaveletIndex(0, (i,), (1,)): 10.0 for i in range(3)}
    assert sum(fund(costs, 1, 29).values()) <= 29


@settings(max_examples=60, deadline=None)
@given(seeds, smooth, norms)
def test_tl_seminorm_matches_grid_oracle(seed, s, p):
    if math.isinf(p):
        p = 2.0
    t = random_tree(np.random.default_rng(seed), d=1, n=10)
    par = SmoothnessParams(s, p, 1)
    exact = tl_seminorm(t, s, par.q, par.tau)
    assert exact == pytest.approx(tl_seminorm_grid(t, s, par.q, par.tau), rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(seeds, smooth)
def test_besov_seminorm_matches_enumeration(seed, s):
    t = random_tree(np.random.default_rng(seed), d=1, n=10)
    par = SmoothnessParams(s, math.inf, 1)
    norm, _ = besov_seminorm(t, s)
    assert norm == pytest.approx(besov_seminorm_enum(t, s, par.tau, par.q), rel=1e-12)


def test_maximal_function_matches_partial(w1=None):
    t = random_tree(np.random.default_rng(5), d=1, n=12)
    x = np.linspace(-6, 6, 97) + 1e-3
    m = maximal_function(t, 1.0, 0.5, x)
    for xi, mi in zip(x, m):
        jmin = min(i.j for i in t)
        cube = (jmin, (int(math.floor(xi / 2.0**jmin)),))
        assert mi == pytest.approx(partial_maximal(t, 1.0, 0.5, cube), rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(seeds, st.sampled_from([1, 2]), smooth, norms, st.integers(1, 5000), st.integers(1, 60))
def test_budget_soundness(seed, d, s, p, N, n0):
    t = random_tree(np.random.default_rng(seed), d=d, n=10, zeros=True)
    par = SmoothnessParams(s, p, d)
    try:
        alloc = allocate(t, par, N, n0)
    except DegenerateInputError:
        assert all(v == 0 for _, v in t.items())
        return
    if par.besov:
        assert alloc.total_cost == pytest.approx(N, rel=1e-9)
    else:
        assert alloc.total_cost <= N * (1 + 1e-9)
    assert alloc.total_budget <= N
    assert all(b == 0 or b >= n0 for b in alloc.budgets.values())
    assert all(b <= c * (1 + 1e-12) for b, c in zip(alloc.budgets.values(), alloc.costs.values()))


@settings(max_examples=40, deadline=None)
@given(seeds, smooth, norms)
def test_funding_monotone_in_N(seed, s, p):
    t = random_tree(np.random.default_rng(seed), d=1, n=10)
    par = SmoothnessParams(s, p, 1)
    prev = None
    for N in (50, 100, 200, 400, 800, 1600):
        b = allocate(t, par, N, 20).budgets
        if prev is not None:
            assert all(b[i] >= prev[i] for i in b)
        prev = b


@settings(max_examples=40, deadline=None)
@given(seeds, smooth, norms, st.sampled_from([0.1, 10.0]))
def test_allocation_scale_invariant(seed, s, p, lam):
    t = random_tree(np.random.default_rng(seed), d=1, n=10)
    par = SmoothnessParams(s, p, 1)
    assert allocate(t, par, 1000, 10).budgets == allocate(t.scaled(lam), par, 1000, 10).budgets


def test_synthetic_tree_energy_decay():
    ratios = {}
    for s in (1.0, 2.0):
        t = make_synthetic_tree(1, s)
        _, energies = besov_seminorm(t, s)
        ratios[s] = [energies[j] / energies[j + 1] for j in range(-5, 0)]
    assert all(r2 < r1 for r1, r2 in zip(ratios[1.0], ratios[2.0]))


def test_csv_columns():
    t = CoefficientTree(1, {UNIT: 1.0})
    csv_text = tl_costs(t, SmoothnessParams(1.0, 2.0, 1), 10).to_csv()
    assert csv_text.splitlines()[0] == "j,k0,e0,cost,budget"
