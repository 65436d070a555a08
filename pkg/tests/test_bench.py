from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import floyd_warshall, naive_opt, scan_ball
from sumradii.bench import (
    BatchSpec,
    SplitMix64,
    brute_force_opt,
    diameter_cost,
    random_instance,
    ratio_report,
    tight_instance,
    tight_point_ids,
)
from sumradii.io import instance_digest
from sumradii.metric import UNREACHABLE, MetricInstance, Pair, verify_metric
from sumradii.rounding import Solution, validate_solution
from sumradii.solver import solve

SEED42_DIGEST = "93f46587dbb169344fc43c8a81ef809578eea0aa4749eaa7694f64185b3e8923"
SEED42_OPT = Fraction(396207663, 1073741824)


def permuted(inst, perm):
    n = inst.n
    rows = tuple(tuple(inst.distances[perm[a]][perm[b]] for b in range(n)) for a in range(n))
    return MetricInstance(rows, k=inst.k, m=inst.m, lower_bounds=inst.lower_bounds)


def test_splitmix_reference_values():
    rng = SplitMix64(0)
    assert [rng.next() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_oracle_tight_and_trivial():
    assert brute_force_opt(tight_instance(3, 1)).cost == 3
    assert brute_force_opt(tight_instance(3, 2)).cost == 6
    single = MetricInstance(((Fraction(0),),), k=1)
    assert brute_force_opt(single).cost == 0


def test_oracle_seed42_regression():
    inst = random_instance(8, seed=42, k=2, m=1)
    assert brute_force_opt(inst).cost == SEED42_OPT
    assert brute_force_opt(inst, reverse=True).cost == SEED42_OPT
    assert naive_opt(inst) == SEED42_OPT


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 7), st.integers(1, 2), st.integers(0, 1))
def test_oracle_matches_plain_enumeration(seed, n, k, m):
    inst = random_instance(n, seed=seed, k=k, m=m)
    got = brute_force_opt(inst)
    assert got.cost == naive_opt(inst)
    assert validate_solution(inst, got.solution) == []


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(4, 7), st.integers(1, 2), st.integers(1, 3))
def test_lower_bound_oracle_matches_flow_enumeration(seed, n, k, L):
    inst = random_instance(n, seed=seed, k=k, lower_bound=L)
    got = brute_force_opt(inst)
    assert got.cost == naive_opt(inst, cardinality=inst.lower_bounds.bounds)
    assert validate_solution(inst, got.solution) == []


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.permutations(range(7)))
def test_oracle_permutation_invariant(seed, perm):
    inst = random_instance(7, seed=seed, k=2, m=1)
    assert brute_force_opt(permuted(inst, perm)).cost == brute_force_opt(inst).cost


def test_oracle_declines_over_budget():
    assert brute_force_opt(random_instance(8, seed=1, k=3), max_subsets=10) is None


def test_tight_h3_structure():
    inst = tight_instance(3, 1)
    hubs, grid = tight_point_ids(3)
    assert inst.n == 12
    assert inst.d(hubs[0], grid[1, 1]) == 3
    assert inst.d(hubs[0], grid[2, 1]) == 1
    edges = [(hubs[a - 1], v) for a in range(1, 4) for (i, _), v in grid.items() if i != a]
    fw = floyd_warshall(12, edges)
    assert [[Fraction(x) for x in row] for row in fw] == [list(r) for r in inst.distances]
    assert verify_metric(inst) == []


def test_tight_copies_unreachable():
    inst = tight_instance(3, 2)
    assert inst.n == 24
    assert all(inst.d(a, b) == UNREACHABLE for a in range(12) for b in range(12, 24))


def test_tight_h4_hub_ball():
    inst = tight_instance(4, 1)
    assert inst.n == 20
    assert len(scan_ball(inst, tight_point_ids(4)[0][0], 1)) == 13


def test_tight_rejects_small_h():
    with pytest.raises(ValueError):
        tight_instance(2, 1)


def test_random_instance_determinism():
    assert instance_digest(random_instance(8, seed=42)) == SEED42_DIGEST
    a, b = random_instance(9, dim=3, seed=5), random_instance(9, dim=3, seed=5)
    assert a == b
    one = random_instance(1, seed=3)
    assert one.distances == ((0,),)


def test_diameter_cost():
    inst = random_instance(5, seed=2)
    singles = Solution.from_pairs(inst, [Pair(0, j) for j in range(5)])
    assert diameter_cost(inst, singles) == 0
    tight = tight_instance(3, 1)
    assert diameter_cost(tight, solve(tight).solution) == 3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 8), st.sampled_from(["plain", "outliers"]))
def test_diameter_at_most_twice_radius(seed, n, mode):
    inst = random_instance(n, seed=seed, k=2, m=1 if mode == "outliers" else 0)
    sol = solve(inst, mode).solution
    assert diameter_cost(inst, sol) <= 2 * sol.cost
    assert diameter_cost(inst, brute_force_opt(inst).solution) <= 2 * brute_force_opt(inst).cost


def test_ratio_report_empty():
    report = ratio_report(BatchSpec(count=0))
    assert report.rows == ()
    assert report.aggregate()["rows"] == 0


def test_ratio_report_tight_sweep():
    report = ratio_report(BatchSpec(suite="tight", k=1, hs=(3, 4, 5, 6), oracle=True))
    for h, row in zip((3, 4, 5, 6), report.rows):
        assert row.primal_dual_ratio == Fraction(3 * (h * h - h), h * h + h - 1)
        assert row.ratio == 1
        assert row.feasible


def test_ratio_report_digest_deterministic():
    spec = BatchSpec(n=8, k=2, count=100, seed=0)
    first, second = ratio_report(spec), ratio_report(spec)
    assert first.digest() == second.digest()
    assert len(first.rows) == 100
    assert all(r.feasible for r in first.rows)

