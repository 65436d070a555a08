"""End-to-end pipelines: guessing, dual raising and rounding."""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Union

from .bench import brute_force_opt
from .dual import DualSolution, count_components, dual_objective
from .metric import (
    InfeasibleError,
    InternalError,
    MetricInstance,
    Pair,
    candidate_pairs,
    guess_prefixes,
)
from .outliers import (
    FixpointResult,
    OrderlyStructured,
    TiedCrossingError,
    iterate_to_fixpoint,
    mix_orderly_structured,
    run_subroutine,
    upper_lambda,
)
from .primal_dual import RaiseResult, StalledError, StructuredPairs, build_structured_pairs, raise_duals
from .rounding import (
    ANY_CENTER,
    COLOCATED,
    ComponentCover,
    Solution,
    assemble_no_outliers,
    assemble_outliers,
    assemble_pairs,
    glb_assign,
    validate_solution,
)

MODES = ("plain", "outliers", "glb", "glb-outliers")

Structure = Union[StructuredPairs, OrderlyStructured, None]


@dataclass(frozen=True)
class ResidualResult:
    """What the primal-dual pipeline produced on one residual instance."""

    instance: MetricInstance
    pairs: tuple[Pair, ...]
    witnesses: tuple[Pair | None, ...]
    covers: tuple[ComponentCover, ...] = ()
    dual: DualSolution | None = None
    dual_objective: Fraction | None = None
    special: Pair | None = None
    structure: Structure = None
    raised: RaiseResult | None = None
    search: FixpointResult | None = None
    case: int | None = None
    trivial: bool = False
    tied_crossing: bool = False


@dataclass(frozen=True)
class SolveResult:
    solution: Solution
    mode: str
    guess: int
    guessed: tuple[Pair, ...]
    residual: ResidualResult | None
    short_circuit: bool = False
    guesses_tried: int = 0
    guesses_feasible: int = 0

    @property
    def cost(self) -> Fraction:
        return self.solution.cost

    @property
    def dual_objective(self) -> Fraction | None:
        return None if self.residual is None else self.residual.dual_objective

    @property
    def special(self) -> Pair | None:
        return None if self.residual is None else self.residual.special

    @property
    def mu(self) -> Fraction | None:
        return None if self.residual is None else self.residual.instance.mu


def _uses_outliers(mode: str) -> bool:
    return mode in ("outliers", "glb-outliers")


def _uses_glb(mode: str) -> bool:
    return mode in ("glb", "glb-outliers")


def prepare(instance: MetricInstance, mode: str) -> MetricInstance:
    """The instance as seen by ``mode``: drop ``m`` or lower bounds if unused."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    if _uses_glb(mode) and instance.lower_bounds is None:
        raise InfeasibleError(f"mode {mode!r} needs lower bounds in the instance")
    out = instance
    if not _uses_glb(mode) and instance.lower_bounds is not None:
        out = replace(out, lower_bounds=None)
    if not _uses_outliers(mode) and instance.m:
        out = replace(out, m=0)
    return out


def consistent_guess(residual: MetricInstance, mode: str, pairs) -> bool:
    """Whether ``k'`` balls within the radius cap can serve the residual.

    A wrong guess can leave a residual that no ``k'`` capped pairs serve; the
    raising procedures rely on such a solution existing.  Without outliers
    the test is that all capped pairs together form at most ``k'``
    components; with outliers it is the large-``lambda`` subroutine run.
    """
    if _uses_outliers(mode):
        return not run_subroutine(residual, upper_lambda(residual), pairs).more(residual.k)
    return count_components(residual, pairs) <= residual.k


def solve_residual(residual: MetricInstance, mode: str, guessed: bool = False) -> ResidualResult | None:
    """Run the primal-dual pipeline on one residual instance.

    Returns ``None`` when the residual cannot be solved (for instance an
    active point that no allowed pair can reach) or, for a guessed residual,
    when the guess is inconsistent.
    """
    cover_mode = COLOCATED if _uses_glb(mode) else ANY_CENTER
    k_prime, m = residual.k, residual.m
    active = residual.active_points
    if len(active) <= k_prime + m:
        if not active:
            return ResidualResult(residual, (), (), trivial=True)
        if _uses_glb(mode):
            return None
        kept = active[: max(0, len(active) - m)]
        pairs = tuple(Pair(0, j) for j in kept)
        return ResidualResult(residual, pairs, (None,) * len(pairs), trivial=True)
    if k_prime == 0:
        return None
    pairs = candidate_pairs(residual)
    try:
        if guessed and not consistent_guess(residual, mode, pairs):
            return None
        if not _uses_outliers(mode):
            try:
                raised = raise_duals(residual, pairs)
            except StalledError:
                # capped pairs connect through guessed points but no k' of
                # them serve the residual, so the guess is wrong
                if guessed:
                    return None
                raise
            sp = build_structured_pairs(residual, raised)
            asm = assemble_no_outliers(residual, sp, cover_mode)
            return ResidualResult(
                residual,
                asm.pairs,
                asm.witnesses,
                asm.covers,
                sp.dual,
                dual_objective(sp.dual, k_prime),
                sp.special,
                sp,
                raised=raised,
            )
        search = iterate_to_fixpoint(residual, pairs)
        tied = False
        if search.degenerate:
            asm = assemble_pairs(residual, search.run_lo.picked, cover_mode)
            dual = search.run_lo.dual
            structure: Structure = None
            special = None
        else:
            try:
                os_ = mix_orderly_structured(residual, search)
            except TiedCrossingError:
                less = search.run_hi if search.run_mid.more(k_prime) else search.run_mid
                asm = assemble_pairs(residual, less.picked, cover_mode)
                dual, structure, special, tied = less.dual, None, None, True
            else:
                asm = assemble_outliers(residual, os_, cover_mode)
                dual, structure, special = os_.dual, os_, os_.special
        return ResidualResult(
            residual,
            asm.pairs,
            asm.witnesses,
            asm.covers,
            dual,
            dual_objective(dual, k_prime, m),
            special,
            structure,
            search=search,
            case=asm.case,
            tied_crossing=tied,
        )
    except InfeasibleError:
        return None


def merge(instance: MetricInstance, guessed: tuple[Pair, ...], res: ResidualResult, mode: str) -> Solution:
    """Combine guessed pairs with a residual solution on the full instance."""
    if _uses_glb(mode):
        assignment = glb_assign(instance, res.pairs, res.witnesses, guessed)
        return Solution.from_assignment(instance, assignment)
    return Solution.from_pairs(instance, guessed + res.pairs)


def solve(instance: MetricInstance, mode: str = "plain", guess: int = 0) -> SolveResult:
    """Best merged solution over all guesses of depth ``guess``.

    With ``k <= guess`` the exhaustive oracle answers directly.
    """
    inst = prepare(instance, mode)
    if guess < 0 or guess > inst.k:
        raise ValueError(f"guess depth {guess} must lie in [0, k = {inst.k}]")
    if inst.k <= guess:
        got = brute_force_opt(inst)
        if got is None:
            raise InfeasibleError("the exhaustive oracle declined this instance")
        return SolveResult(got.solution, mode, guess, (), None, short_circuit=True)
    if _uses_glb(mode) and guess == 0 and len(inst.active_points) <= inst.k + inst.m:
        got = brute_force_opt(inst)
        if got is None:
            raise InfeasibleError("the exhaustive oracle declined this instance")
        return SolveResult(got.solution, mode, guess, (), None, short_circuit=True)

    best: SolveResult | None = None
    tried = feasible = 0
    for guessed, residual in guess_prefixes(inst, guess):
        tried += 1
        res = solve_residual(residual, mode, guessed=bool(guessed))
        if res is None:
            continue
        sol = merge(inst, guessed, res, mode)
        problems = validate_solution(inst, sol)
        if problems:
            raise InternalError(f"merged solution for guess {guessed} is infeasible: {problems}")
        feasible += 1
        if best is None or sol.cost < best.solution.cost:
            best = SolveResult(sol, mode, guess, guessed, res)
    if best is None:
        raise InfeasibleError("no guess produced a feasible solution")
    return replace(best, guesses_tried=tried, guesses_feasible=feasible)
