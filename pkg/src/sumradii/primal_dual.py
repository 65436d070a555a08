"""Dual raising without outliers, where ``lambda`` is raised as a variable.

Starting from the zero dual, every round picks a set ``X''`` of active
points such that no almost-tight pair covers two of them, then raises
``lambda`` and ``alpha_j`` for ``j`` in ``X''`` by the largest amount that
keeps every constraint satisfied.  The loop stops once the almost-tight pairs
form at most ``k'`` components.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .dual import DualSolution, count_components, dual_objective, slack, uncovered_mask
from .metric import (
    InfeasibleError,
    InternalError,
    MetricInstance,
    Pair,
    candidate_pairs,
    popcount,
)


class StalledError(InternalError):
    """No pair bounds the raise although components still exceed ``k'``."""


@dataclass(frozen=True)
class RaiseStep:
    delta: Fraction
    independent: int
    components: int
    objective: Fraction


@dataclass(frozen=True)
class RaiseResult:
    """Outcome of :func:`raise_duals`.

    ``before`` and ``after`` are the almost-tight sets before and after the
    final raise.  ``degenerate`` is set when no raise was needed.
    """

    dual: DualSolution
    before: tuple[Pair, ...]
    after: tuple[Pair, ...]
    degenerate: bool
    mu: Fraction
    trace: tuple[RaiseStep, ...]
    cover_steps: int = 0


@dataclass(frozen=True)
class StructuredPairs:
    """Almost-tight pairs ``B'`` with a special pair.

    ``special`` is the last pair of ``pairs``; it is ``None`` only for the
    degenerate case where the almost-tight set already had few enough
    components before any raise.
    """

    pairs: tuple[Pair, ...]
    special: Pair | None
    dual: DualSolution
    mu: Fraction

    @property
    def rest(self) -> tuple[Pair, ...]:
        if self.special is None:
            return self.pairs
        return tuple(p for p in self.pairs if p != self.special)


def select_independent_points(
    instance: MetricInstance, almost_tight: Sequence[Pair], points: Sequence[int] | None = None
) -> list[int]:
    """Greedy maximal set of points, no two inside one almost-tight ball."""
    masks = [instance.pair_mask(p) for p in almost_tight]
    return _select(masks, instance.active_points if points is None else points)


def _select(masks: Sequence[int], points: Sequence[int]) -> list[int]:
    chosen: list[int] = []
    chosen_mask = 0
    for j in points:
        bit = 1 << j
        if all(not (m & bit) or not (m & chosen_mask) for m in masks):
            chosen.append(j)
            chosen_mask |= bit
    return chosen


def raise_step(
    instance: MetricInstance,
    pairs: Sequence[Pair],
    dual: DualSolution,
    independent: Sequence[int],
    mu: Fraction,
) -> tuple[Fraction, DualSolution]:
    """One uniform raise of ``lambda`` and of ``alpha`` on ``independent``."""
    if not independent:
        raise ValueError("the raised point set must be nonempty")
    raised = 0
    for j in independent:
        raised |= 1 << j
    delta = None
    for p in pairs:
        mask = instance.pair_mask(p) & instance.active_mask
        s = p.radius + dual.lam - dual.alpha_over(mask)
        if s <= mu:
            continue
        c = popcount(mask & raised)
        if c >= 2:
            cand = s / (c - 1)
            if delta is None or cand < delta:
                delta = cand
    if delta is None:
        raise StalledError("no pair limits the raise")
    alpha = dict(dual.alpha)
    for j in independent:
        alpha[j] = alpha.get(j, Fraction(0)) + delta
    return delta, DualSolution(dual.lam + delta, alpha, dual.gamma)


class _Raiser:
    """Incremental slack bookkeeping shared by the raising loops."""

    def __init__(self, instance: MetricInstance, pairs: Sequence[Pair], mu: Fraction):
        self.instance = instance
        self.pairs = list(pairs)
        self.mu = mu
        self.masks = [instance.pair_mask(p) & instance.active_mask for p in self.pairs]
        self.slack = [p.radius for p in self.pairs]
        self.lam = Fraction(0)
        self.alpha = {j: Fraction(0) for j in instance.active_points}

    def almost_tight(self) -> list[int]:
        return [i for i, s in enumerate(self.slack) if s <= self.mu]

    def tight_pairs(self, idx: Sequence[int]) -> tuple[Pair, ...]:
        return tuple(self.pairs[i] for i in idx)

    def dual(self) -> DualSolution:
        return DualSolution(self.lam, dict(self.alpha))

    def cover_phase(self) -> int:
        """Raise ``alpha`` at fixed ``lambda`` until almost-tight pairs cover ``X'``.

        Without lower bounds every ``(j, 0)`` pair is tight from the start and
        nothing happens.  Under lower bounds such pairs may be missing.
        """
        steps = 0
        active = self.instance.active_mask
        while True:
            cover = 0
            for i in self.almost_tight():
                cover |= self.masks[i]
            raising = active & ~cover
            if not raising:
                return steps
            best = None
            rates = []
            for i, mask in enumerate(self.masks):
                c = popcount(mask & raising)
                rates.append(c)
                if c and self.slack[i] > self.mu:
                    cand = self.slack[i] / c
                    if best is None or cand < best:
                        best = cand
            if best is None:
                raise InfeasibleError("some active point lies in no candidate pair")
            for i, c in enumerate(rates):
                if c:
                    self.slack[i] -= c * best
            for j in range(raising.bit_length()):
                if raising >> j & 1:
                    self.alpha[j] += best
            steps += 1


def raise_duals(
    instance: MetricInstance,
    pairs: Sequence[Pair] | None = None,
    mu: Fraction | None = None,
) -> RaiseResult:
    """Raise the dual until the almost-tight pairs form at most ``k`` components.

    ``instance.k`` plays the role of ``k'``.
    """
    if pairs is None:
        pairs = candidate_pairs(instance)
    if mu is None:
        mu = instance.mu
    k_prime = instance.k
    if len(instance.active_points) <= k_prime:
        raise ValueError("raising needs more active points than clusters")
    state = _Raiser(instance, pairs, mu)
    cover_steps = state.cover_phase()
    current = state.almost_tight()
    comps = count_components(instance, state.tight_pairs(current))
    if comps <= k_prime:
        tight = state.tight_pairs(current)
        return RaiseResult(state.dual(), tight, tight, True, mu, (), cover_steps)

    n = instance.n
    cap = 4 * n**4 + 16
    trace = []
    previous = current
    rounds = 0
    while comps > k_prime:
        rounds += 1
        if rounds > cap:
            raise InternalError(f"raising exceeded {cap} rounds; trace tail {trace[-3:]}")
        at_masks = [state.masks[i] for i in current]
        chosen = _select(at_masks, instance.active_points)
        raised = 0
        for j in chosen:
            raised |= 1 << j
        rates = [popcount(mask & raised) for mask in state.masks]
        delta = None
        for i, c in enumerate(rates):
            if c >= 2 and state.slack[i] > mu:
                cand = state.slack[i] / (c - 1)
                if delta is None or cand < delta:
                    delta = cand
        if delta is None:
            raise StalledError(f"stalled with {comps} components after {rounds - 1} rounds")
        state.lam += delta
        for j in chosen:
            state.alpha[j] += delta
        for i, c in enumerate(rates):
            if c != 1:
                state.slack[i] += delta * (1 - c)
            if state.slack[i] < 0:
                raise InternalError(f"dual constraint of {state.pairs[i]} violated")
        previous = current
        current = state.almost_tight()
        comps = count_components(instance, state.tight_pairs(current))
        dual = state.dual()
        trace.append(RaiseStep(delta, len(chosen), comps, dual_objective(dual, k_prime)))
    return RaiseResult(
        state.dual(),
        state.tight_pairs(previous),
        state.tight_pairs(current),
        False,
        mu,
        tuple(trace),
        cover_steps,
    )


def build_structured_pairs(instance: MetricInstance, result: RaiseResult) -> StructuredPairs:
    """Turn the last two almost-tight sets into structured pairs.

    Starts from the pairs almost tight both before and after the final raise
    and adds the newly almost-tight pairs in pair order until the component
    count drops to ``k'``.  The last pair added is the special pair.
    """
    k_prime = instance.k
    if result.degenerate:
        sp = StructuredPairs(tuple(sorted(result.after)), None, result.dual, result.mu)
    else:
        kept = set(result.before) & set(result.after)
        chosen = sorted(kept)
        special = None
        if count_components(instance, chosen) <= k_prime:
            raise InternalError("pairs kept across the last raise already have few components")
        for p in sorted(set(result.after) - kept):
            chosen.append(p)
            if count_components(instance, chosen) <= k_prime:
                special = p
                break
        if special is None:
            raise InternalError("final almost-tight set still has too many components")
        sp = StructuredPairs(tuple(chosen), special, result.dual, result.mu)
    problems = structured_violations(instance, sp)
    if problems:
        raise InternalError("; ".join(problems))
    return sp


def structured_violations(instance: MetricInstance, sp: StructuredPairs) -> list[str]:
    """Check the three structured-pair conditions; returns the failures."""
    k_prime = instance.k
    problems = []
    for p in sp.pairs:
        if slack(instance, sp.dual, p) > sp.mu:
            problems.append(f"SP1: {p} is not almost tight")
    if uncovered_mask(instance, sp.rest):
        problems.append("SP2: pairs without the special pair leave points uncovered")
    total = count_components(instance, sp.pairs)
    if total > k_prime:
        problems.append(f"SP3: {total} components exceed k' = {k_prime}")
    if sp.special is not None:
        if sp.pairs[-1] != sp.special:
            problems.append("special pair is not the last pair")
        rest = count_components(instance, sp.rest)
        if rest <= k_prime:
            problems.append(f"SP3: only {rest} components without the special pair")
    return problems


def solve_structured(instance: MetricInstance) -> tuple[RaiseResult, StructuredPairs]:
    result = raise_duals(instance)
    return result, build_structured_pairs(instance, result)
