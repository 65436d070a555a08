from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import best_disjoint, floyd_warshall, scan_ball
from sumradii.bench import brute_force_opt, random_instance, tight_instance, tight_point_ids
from sumradii.dual import components, dual_objective, sum_of_radii
from sumradii.metric import MetricInstance, Pair, candidate_pairs
from sumradii.outliers import iterate_to_fixpoint, mix_orderly_structured
from sumradii.primal_dual import solve_structured
from sumradii.rounding import (
    ANY_CENTER,
    COLOCATED,
    Solution,
    assemble_no_outliers,
    assemble_outliers,
    component_graph,
    cover_component,
    cover_components,
    creplaced,
    disjoint_charge_holds,
    glb_assign,
    graph_radius,
    max_disjoint_subset,
    outlier_case,
    point_of,
    validate_solution,
)
from sumradii.solver import solve


def scan_cover(inst, comp, centers=None):
    pts = set().union(*(scan_ball(inst, p.center, p.radius) for p in comp))
    best = None
    for i in centers if centers is not None else range(inst.n):
        r = max(inst.distances[i][j] for j in pts)
        if best is None or (r, i) < best:
            best = (r, i)
    return Pair(best[0], best[1])


def tight_component(h=3):
    inst = tight_instance(h, 1)
    hubs = tight_point_ids(h)[0]
    comp = [Pair(1, v) for v in hubs] + [Pair(0, j) for j in range(inst.n)]
    return inst, comp


def test_cover_singleton_component():
    inst = random_instance(6, seed=2)
    p = candidate_pairs(inst)[7]
    assert cover_component(inst, [p]).radius <= p.radius
    assert cover_component(inst, [p], COLOCATED).radius <= p.radius


def test_cover_tight_component_radius_three():
    inst, comp = tight_component()
    assert cover_component(inst, comp).radius == 3
    assert cover_component(inst, comp, COLOCATED).radius == 3


@pytest.mark.parametrize("seed", [42, 4, 9])
def test_cover_component_matches_full_scan(seed):
    inst = random_instance(8, seed=seed, k=2)
    _, sp = solve_structured(inst)
    for comp in components(inst, sp.pairs):
        assert cover_component(inst, comp) == scan_cover(inst, comp)
        centers = sorted({p.center for p in comp})
        assert cover_component(inst, comp, COLOCATED) == scan_cover(inst, comp, centers)


def test_creplaced_tight_copies():
    for k in (1, 2, 3):
        inst = tight_instance(3, k)
        _, sp = solve_structured(inst)
        got = creplaced(inst, sp.pairs)
        assert len(got) == k
        assert sum_of_radii(got) == 3 * k


def test_creplaced_seed42_preserves_components():
    inst = random_instance(8, seed=42, k=2)
    _, sp = solve_structured(inst)
    comps = components(inst, sp.pairs)
    got = creplaced(inst, sp.pairs)
    assert len(got) == len(comps)
    assert sum_of_radii(got) == sum((scan_cover(inst, c).radius for c in comps), Fraction(0))


def test_creplaced_disjoint_singletons():
    inst = random_instance(5, seed=1)
    pairs = [Pair(0, j) for j in range(5)]
    assert sorted(creplaced(inst, pairs)) == pairs


def test_assemble_no_outliers_tight():
    inst = tight_instance(3, 1)
    _, sp = solve_structured(inst)
    asm = assemble_no_outliers(inst, sp)
    assert asm.solution.cost == 3
    assert len(asm.pairs) == 1


def test_assemble_no_outliers_seed42_dual_bound():
    inst = random_instance(8, seed=42, k=2)
    _, sp = solve_structured(inst)
    asm = assemble_no_outliers(inst, sp)
    rstar = sp.special.radius if sp.special else 0
    assert validate_solution(inst, asm.solution) == []
    assert asm.solution.cost <= 3 * dual_objective(sp.dual, 2) + 3 * rstar + 3 * inst.n * sp.mu


def test_assemble_outliers_tight_without_outliers():
    inst = tight_instance(3, 1)
    os_ = mix_orderly_structured(inst, iterate_to_fixpoint(inst))
    asm = assemble_outliers(inst, os_)
    assert asm.solution.cost == 3


def test_assemble_outliers_seed42_bound():
    inst = random_instance(8, seed=42, k=2, m=1)
    os_ = mix_orderly_structured(inst, iterate_to_fixpoint(inst))
    asm = assemble_outliers(inst, os_)
    assert validate_solution(inst, asm.solution) == []
    assert asm.case in (1, 2, 3, 4)
    assert asm.solution.cost <= 3 * brute_force_opt(inst).cost + 3 * os_.special.radius


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(5, 9), st.integers(1, 2))
def test_outlier_case_selection_is_feasible(seed, n, m):
    inst = random_instance(n, seed=seed, k=2, m=m)
    fix = iterate_to_fixpoint(inst)
    if fix.degenerate:
        return
    os_ = mix_orderly_structured(inst, fix)
    case, chosen = outlier_case(inst, os_)
    if case == 1:
        assert os_.ell_prime == os_.ell
    elif case == 2:
        assert os_.ell_prime == os_.ell - 1
    assert os_.special in chosen
    sol = Solution.from_pairs(inst, creplaced(inst, chosen))
    assert validate_solution(inst, sol) == []


def test_glb_assign_without_guesses():
    inst = random_instance(8, seed=42, k=2, lower_bound=2)
    res = solve(inst, "glb")
    assignment = res.solution.assignment
    counts: dict[int, int] = {}
    for j, c in assignment.items():
        assert c is not None
        counts[c] = counts.get(c, 0) + 1
    assert all(v >= 2 for v in counts.values())
    for cover in res.residual.covers:
        pts = set().union(*(scan_ball(inst, p.center, p.radius) for p in cover.component))
        assert {assignment[j] for j in pts} == {cover.pair.center}


def test_glb_assign_stage_three_only():
    xs = [0, 1, 10, 11, 30, 31]
    inst = MetricInstance(tuple(tuple(Fraction(abs(a - b)) for b in xs) for a in xs), k=3)
    pairs, witnesses = [Pair(1, 0)], [Pair(1, 0)]
    guessed = [Pair(1, 2), Pair(1, 4)]
    assignment = glb_assign(inst, pairs, witnesses, guessed)
    assert assignment == {0: 0, 1: 0, 2: 2, 3: 2, 4: 4, 5: 4}
    sol = Solution.from_assignment(inst, assignment)
    assert sol.cost <= sum_of_radii(pairs) + 2 * sum_of_radii(guessed)


def test_glb_assign_rejects_overlapping_witnesses():
    xs = [0, 1, 2]
    inst = MetricInstance(tuple(tuple(Fraction(abs(a - b)) for b in xs) for a in xs), k=2)
    with pytest.raises(ValueError):
        glb_assign(inst, [Pair(1, 0), Pair(1, 2)], [Pair(1, 0), Pair(1, 2)])


def test_graph_radius_single_pair():
    xs = [0, 5]
    inst = MetricInstance(tuple(tuple(Fraction(abs(a - b)) for b in xs) for a in xs), k=1)
    _, rad = graph_radius(component_graph(inst, [Pair(2, 0)]))
    assert rad == 2


def test_graph_radius_tight_component():
    inst, comp = tight_component()
    cg = component_graph(inst, comp)
    center, rad = graph_radius(cg)
    assert rad == 3
    # zero-radius pairs are dominated by the hub balls
    assert set(cg.antichain) == {p for p in comp if p.radius == 1}
    # explicit all-pairs shortest paths on the same vertex set, unit hub weights
    nodes = sorted(cg.graph.nodes, key=repr)
    index = {v: t for t, v in enumerate(nodes)}
    edges = [(index[u], index[v]) for u, v in cg.graph.edges]
    dist = floyd_warshall(len(nodes), edges)
    ecc = [max(row) for t, row in enumerate(dist) if nodes[t][0] != "t"]
    assert min(ecc) == rad


def test_graph_radius_star_from_hub():
    # three pairs sharing only the hub point 0
    xs = [(0, 0), (2, 0), (0, 3), (-4, 0)]
    n = len(xs)
    d = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            if a != b:
                d[a][b] = Fraction(abs(xs[a][0] - xs[b][0]) + abs(xs[a][1] - xs[b][1]))
    inst = MetricInstance(tuple(map(tuple, d)), k=1)
    star = [Pair(2, 1), Pair(3, 2), Pair(4, 3)]
    center, rad = graph_radius(component_graph(inst, star))
    assert center == ("p", 0)
    assert rad == 8
    assert point_of(center) == 0


def test_max_disjoint_all_disjoint():
    inst = random_instance(6, seed=1)
    comp = [Pair(0, j) for j in range(6)]
    chosen, exact = max_disjoint_subset(inst, comp)
    assert exact and set(chosen) == set(comp)


def test_max_disjoint_nested_takes_largest():
    xs = [0, 1, 2, 3]
    inst = MetricInstance(tuple(tuple(Fraction(abs(a - b)) for b in xs) for a in xs), k=1)
    chosen, _ = max_disjoint_subset(inst, [Pair(1, 1), Pair(2, 1), Pair(3, 0)])
    assert chosen == (Pair(3, 0),)


@pytest.mark.parametrize("seed", [42, 11, 23])
def test_max_disjoint_matches_enumeration(seed):
    inst = random_instance(9, seed=seed, k=2)
    _, sp = solve_structured(inst)
    for comp in components(inst, sp.pairs):
        if len(comp) > 12:
            continue
        chosen, exact = max_disjoint_subset(inst, comp)
        assert exact
        assert sum_of_radii(chosen) == best_disjoint(inst, comp)


def test_validate_solution_reports():
    inst = tight_instance(3, 1)
    assert validate_solution(inst, solve(inst).solution) == []
    small = random_instance(5, seed=3, k=1, m=1)
    sol = Solution.from_pairs(small, [Pair(0, 0)])
    problems = validate_solution(small, sol)
    assert len(problems) == 1 and "outliers" in problems[0]
    assert validate_solution(small, brute_force_opt(small).solution) == []


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(4, 9), st.integers(1, 3))
def test_cover_radius_within_graph_radius(seed, n, k):
    inst = random_instance(n, seed=seed, k=k)
    _, sp = solve_structured(inst)
    for cover in cover_components(inst, sp.pairs, ANY_CENTER):
        _, rad = graph_radius(component_graph(inst, cover.component))
        assert cover.pair.radius <= rad


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(5, 9), st.integers(1, 2))
def test_disjoint_charge(seed, n, m):
    inst = random_instance(n, seed=seed, k=2, m=m)
    fix = iterate_to_fixpoint(inst)
    if fix.degenerate:
        return
    os_ = mix_orderly_structured(inst, fix)
    dual = os_.dual
    for comp in components(inst, os_.pairs):
        chosen, _ = max_disjoint_subset(inst, comp)
        covered = set().union(*(scan_ball(inst, p.center, p.radius) for p in chosen))
        tight = [j for j in inst.active_points if j not in covered and dual.a(j) == dual.gamma]
        assert disjoint_charge_holds(inst, dual, chosen, tight)
