from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sumradii.bench import brute_force_opt, random_instance, tight_instance
from sumradii.metric import InfeasibleError, MetricInstance, residual_instance
from sumradii.rounding import validate_solution
from sumradii.solver import MODES, prepare, solve, solve_residual


def test_prepare_strips_unused_budgets():
    inst = random_instance(6, seed=1, k=2, m=1, lower_bound=2)
    assert prepare(inst, "plain").m == 0
    assert prepare(inst, "plain").lower_bounds is None
    assert prepare(inst, "outliers").m == 1
    assert prepare(inst, "glb").lower_bounds is not None
    with pytest.raises(ValueError):
        prepare(inst, "fancy")
    with pytest.raises(InfeasibleError):
        prepare(random_instance(6, seed=1), "glb")


def test_guess_depth_validated():
    inst = random_instance(5, seed=2, k=1)
    with pytest.raises(ValueError):
        solve(inst, "plain", 2)


def test_short_circuit_is_exact():
    inst = random_instance(7, seed=3, k=2, m=1)
    res = solve(inst, "outliers", 2)
    assert res.short_circuit
    assert res.cost == brute_force_opt(inst).cost


def test_single_point():
    inst = MetricInstance(((Fraction(0),),), k=1)
    assert solve(inst).cost == 0


def test_tight_reports_dual():
    res = solve(tight_instance(3, 1))
    assert res.cost == 3
    assert res.dual_objective == Fraction(11, 6)
    assert res.guesses_tried == 1


@pytest.mark.parametrize("mode", MODES)
def test_guessing_keeps_feasible_minimum(mode):
    inst = random_instance(7, seed=9, k=3, m=1, lower_bound=2)
    res = solve(inst, mode, 1)
    assert res.guesses_feasible >= 1
    assert validate_solution(prepare(inst, mode), res.solution) == []
    assert res.cost >= brute_force_opt(prepare(inst, mode)).cost


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 10**6),
    st.integers(4, 8),
    st.integers(1, 3),
    st.sampled_from(MODES),
    st.integers(0, 1),
)
def test_every_mode_feasible_and_above_optimum(seed, n, k, mode, guess):
    inst = random_instance(n, seed=seed, k=k, m=1, lower_bound=2)
    res = solve(inst, mode, min(guess, k))
    prepared = prepare(inst, mode)
    assert validate_solution(prepared, res.solution) == []
    assert res.cost >= brute_force_opt(prepared).cost


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(5, 9), st.integers(2, 3), st.sampled_from(["plain", "outliers"]))
def test_guess_from_optimum_is_never_rejected(seed, n, k, mode):
    inst = prepare(random_instance(n, seed=seed, k=k, m=1), mode)
    opt = brute_force_opt(inst).solution
    if not opt.pairs:
        return
    largest = max(opt.pairs)
    residual = residual_instance(inst, [largest])
    assert solve_residual(residual, mode, guessed=True) is not None


@pytest.mark.parametrize(
    "seed, n, k, m, mode, guess",
    [(1815, 8, 1, 2, "outliers", 0), (259, 9, 3, 2, "glb-outliers", 1)],
)
def test_tied_crossing_falls_back_to_shorter_run(seed, n, k, m, mode, guess):
    inst = random_instance(n, seed=seed, k=k, m=m, lower_bound=2)
    res = solve(inst, mode, guess)
    prepared = prepare(inst, mode)
    assert validate_solution(prepared, res.solution) == []
    assert res.cost >= brute_force_opt(prepared).cost
    if guess == 0:
        assert res.residual.tied_crossing
        assert res.residual.structure is None
        assert res.cost == brute_force_opt(prepared).cost
