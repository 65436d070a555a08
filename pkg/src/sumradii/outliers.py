"""Primal-dual machinery with outliers.

For a fixed ``lambda`` the subroutine raises ``alpha`` in phases: during a
phase every active point outside all tight balls is raised at unit rate, and
the phase ends when some further pair becomes tight.  Tight pairs are picked
in pair order until at most ``m`` active points remain uncovered.

As a function of ``lambda`` the end time of each phase is piecewise affine.
:func:`iterate_to_fixpoint` narrows an interval ``[lo, hi]`` with many
components at ``lo`` and few at ``hi`` until the subroutine behaves
identically at every interior point, and :func:`mix_orderly_structured`
combines an endpoint run with the interior run.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .dual import DualSolution, count_components, count_uncovered, slack, uncovered_mask
from .envelope import Affine, PiecewiseAffine, lower_envelope
from .metric import (
    InfeasibleError,
    InternalError,
    MetricInstance,
    Pair,
    candidate_pairs,
    iter_bits,
    popcount,
)

ZERO = Fraction(0)


class InvariantError(InternalError):
    """The phase history is not constant on the interval being searched."""


@dataclass(frozen=True)
class Phase:
    """One phase of the subroutine.

    ``raising`` is the bitmask of points raised during the phase, ``batch``
    the pairs that turned tight exactly at its end, in pair order.
    """

    raising: int
    duration: Fraction
    end: Fraction
    batch: tuple[Pair, ...]


@dataclass(frozen=True)
class SubroutineRun:
    lam: Fraction
    picked: tuple[Pair, ...]
    tight: tuple[Pair, ...]
    dual: DualSolution
    phases: tuple[Phase, ...]
    components: int

    def more(self, k_prime: int) -> bool:
        return self.components > k_prime


def run_subroutine(instance: MetricInstance, lam, pairs: Sequence[Pair] | None = None) -> SubroutineRun:
    """Simulate the phase-based raise exactly for one value of ``lambda``."""
    lam = Fraction(lam)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if pairs is None:
        pairs = candidate_pairs(instance)
    active = instance.active_mask
    m = instance.m
    masks = [instance.pair_mask(p) & active for p in pairs]
    slacks = [p.radius + lam for p in pairs]
    tight = [False] * len(pairs)
    alpha = {j: ZERO for j in instance.active_points}
    cover_t = 0
    cover_p = 0
    picked: list[Pair] = []
    tight_list: list[Pair] = []
    phases: list[Phase] = []
    now = ZERO
    done = popcount(active) <= m
    while not done:
        raising = active & ~cover_t
        rates = [popcount(mk & raising) for mk in masks]
        dur = None
        for i, c in enumerate(rates):
            if c and not tight[i]:
                cand = slacks[i] / c
                if dur is None or cand < dur:
                    dur = cand
        if dur is None:
            raise InfeasibleError("an uncovered active point lies in no candidate pair")
        if dur:
            for i, c in enumerate(rates):
                if c:
                    slacks[i] -= c * dur
            for j in iter_bits(raising):
                alpha[j] += dur
        now += dur
        batch = []
        for i, s in enumerate(slacks):
            if not tight[i] and s == 0:
                batch.append(i)
            elif s < 0:
                raise InternalError(f"constraint of {pairs[i]} violated at lambda={lam}")
        for i in batch:
            tight[i] = True
            cover_t |= masks[i]
            tight_list.append(pairs[i])
        for i in batch:
            picked.append(pairs[i])
            cover_p |= masks[i]
            if popcount(active & ~cover_p) <= m:
                done = True
                break
        phases.append(Phase(raising, dur, now, tuple(pairs[i] for i in batch)))
    gamma = max(alpha.values(), default=ZERO)
    dual = DualSolution(lam, alpha, gamma)
    return SubroutineRun(
        lam, tuple(picked), tuple(tight_list), dual, tuple(phases), count_components(instance, picked)
    )


# ---------------------------------------------------------------------------
# phase-end functions


@dataclass
class _Replay:
    slacks: list[Affine]
    tight: list[bool]
    durations: list[Affine]
    masks: list[int]


def _replay(
    instance: MetricInstance,
    pairs: Sequence[Pair],
    history: Sequence[Phase],
    lo: Fraction,
    hi: Fraction,
    check: bool = True,
) -> _Replay:
    """Express the slacks after ``history`` as affine functions of ``lambda``.

    With ``check`` set, verifies that every phase of the history ends with
    the same batch of pairs throughout the open interval ``(lo, hi)``.
    """
    active = instance.active_mask
    index = {p: i for i, p in enumerate(pairs)}
    masks = [instance.pair_mask(p) & active for p in pairs]
    slacks = [Affine(1, p.radius) for p in pairs]
    tight = [False] * len(pairs)
    durations: list[Affine] = []
    cover = 0
    for s, phase in enumerate(history, start=1):
        raising = active & ~cover
        if check and raising != phase.raising:
            raise InvariantError(f"phase {s}: raised points differ from the recorded run")
        rates = [popcount(mk & raising) for mk in masks]
        batch = [index[p] for p in phase.batch]
        if not batch:
            raise InvariantError(f"phase {s} has an empty batch")
        first = batch[0]
        if not rates[first]:
            raise InvariantError(f"phase {s}: batch pair {pairs[first]} is not raised")
        delta = slacks[first].scale(Fraction(1, rates[first]))
        if check:
            in_batch = set(batch)
            for i, c in enumerate(rates):
                if tight[i] or not c:
                    if i in in_batch:
                        raise InvariantError(f"phase {s}: {pairs[i]} cannot turn tight")
                    continue
                h = slacks[i].scale(Fraction(1, c))
                if i in in_batch:
                    if h != delta:
                        raise InvariantError(f"phase {s}: {pairs[i]} leaves the batch inside the interval")
                    continue
                at_lo, at_hi = h(lo) - delta(lo), h(hi) - delta(hi)
                if at_lo < 0 or at_hi < 0 or (at_lo == 0 and at_hi == 0):
                    raise InvariantError(f"phase {s}: {pairs[i]} overtakes the batch inside the interval")
        for i, c in enumerate(rates):
            if c:
                slacks[i] = slacks[i] - delta.scale(c)
        for i in batch:
            tight[i] = True
            cover |= masks[i]
        durations.append(delta)
    return _Replay(slacks, tight, durations, masks)


def phase_end_function(
    instance: MetricInstance,
    history: Sequence[Phase],
    lo,
    hi,
    pairs: Sequence[Pair] | None = None,
) -> PiecewiseAffine:
    """End time of phase ``len(history) + 1`` as a function of ``lambda``.

    ``history`` lists the earlier phases, which must be the same at every
    ``lambda`` in the open interval; this is verified and an
    :class:`InvariantError` is raised otherwise.  The result is the earlier
    phases' total duration plus the lower envelope of the per-pair times to
    tightness.
    """
    lo, hi = Fraction(lo), Fraction(hi)
    if pairs is None:
        pairs = candidate_pairs(instance)
    rep = _replay(instance, pairs, history, lo, hi)
    cover = 0
    for i, t in enumerate(rep.tight):
        if t:
            cover |= rep.masks[i]
    raising = instance.active_mask & ~cover
    lines, owners = [], []
    for i, mk in enumerate(rep.masks):
        c = popcount(mk & raising)
        if c and not rep.tight[i]:
            lines.append(rep.slacks[i].scale(Fraction(1, c)))
            owners.append(i)
    if not lines:
        raise InvariantError("no pair can end the next phase")
    env = lower_envelope(lines, lo, hi)
    base = Affine(0, 0)
    for d in rep.durations:
        base = base + d
    labels = tuple(owners[t] for t in env.labels) if env.labels is not None else None
    return PiecewiseAffine(env.breakpoints, tuple(p + base for p in env.pieces), labels)


def breakpoint_binary_search(
    breakpoints: Sequence[Fraction],
    predicate: Callable[[Fraction], bool],
    check_endpoints: bool = False,
) -> tuple[Fraction, Fraction]:
    """Bisect for adjacent breakpoints where ``predicate`` flips.

    ``predicate(b)`` is true for MORE (too many components).  The first
    breakpoint must be MORE and the last LESSEQ; the endpoints are only
    probed when ``check_endpoints`` is set.  Monotonicity is not assumed:
    the bisection keeps one MORE and one LESSEQ endpoint at all times.
    """
    if len(breakpoints) < 2:
        raise ValueError("need at least two breakpoints")
    if check_endpoints:
        if not predicate(breakpoints[0]) or predicate(breakpoints[-1]):
            raise ValueError("endpoints must be MORE and LESSEQ")
    i, j = 0, len(breakpoints) - 1
    while j - i > 1:
        mid = (i + j) // 2
        if predicate(breakpoints[mid]):
            i = mid
        else:
            j = mid
    return breakpoints[i], breakpoints[j]


@dataclass(frozen=True)
class EnvelopeRecord:
    s: int
    lo: Fraction
    hi: Fraction
    function: PiecewiseAffine


@dataclass(frozen=True)
class SearchStep:
    s: int
    lo: Fraction
    hi: Fraction
    breakpoints: int
    probes: tuple[tuple[Fraction, int], ...]


@dataclass(frozen=True)
class FixpointResult:
    """Final bracket ``[lo, hi]`` and the runs at ``lo``, ``hi`` and midpoint.

    ``degenerate`` is set when the run at ``lambda = 0`` already has at most
    ``k'`` components; then only ``run_lo`` is meaningful.
    """

    lo: Fraction
    hi: Fraction
    run_lo: SubroutineRun
    run_hi: SubroutineRun | None
    run_mid: SubroutineRun | None
    s_star: int | None
    degenerate: bool
    envelopes: tuple[EnvelopeRecord, ...] = ()
    trace: tuple[SearchStep, ...] = ()
    runs: int = 0


def upper_lambda(instance: MetricInstance) -> Fraction:
    """A ``lambda`` large enough that the subroutine yields few components."""
    cap = instance.cap
    if cap == 0:
        return Fraction(1)
    return 2 * len(instance.active_points) * instance.k * cap + 1


def iterate_to_fixpoint(instance: MetricInstance, pairs: Sequence[Pair] | None = None) -> FixpointResult:
    """Shrink ``[lo, hi]`` phase by phase until the interior run is constant."""
    if pairs is None:
        pairs = candidate_pairs(instance)
    k_prime = instance.k
    cache: dict[Fraction, SubroutineRun] = {}

    def run(lam: Fraction) -> SubroutineRun:
        got = cache.get(lam)
        if got is None:
            got = cache[lam] = run_subroutine(instance, lam, pairs)
        return got

    start = run(ZERO)
    if not start.more(k_prime):
        return FixpointResult(ZERO, ZERO, start, None, None, None, True, runs=len(cache))
    top = upper_lambda(instance)
    if run(top).more(k_prime):
        raise InternalError(f"lambda={top} still yields {run(top).components} components")

    envelopes: list[EnvelopeRecord] = []
    trace: list[SearchStep] = []
    lo, hi = ZERO, top
    s = 1
    history: tuple[Phase, ...] = ()
    while True:
        g = phase_end_function(instance, history, lo, hi, pairs)
        envelopes.append(EnvelopeRecord(s, lo, hi, g))
        probes: list[tuple[Fraction, int]] = []

        def more(lam: Fraction) -> bool:
            r = run(lam)
            probes.append((lam, r.components))
            return r.more(k_prime)

        lo, hi = breakpoint_binary_search(g.breakpoints, more)
        trace.append(SearchStep(s, lo, hi, len(g.breakpoints), tuple(probes)))
        s += 1
        if s > len(pairs) + 1:
            raise InternalError(f"phase search passed |B| = {len(pairs)}")
        mid = run((lo + hi) / 2)
        if len(mid.phases) <= s - 1:
            break
        history = mid.phases[: s - 1]
    if s > len(pairs):
        raise InternalError(f"s* = {s} exceeds |B| = {len(pairs)}")
    return FixpointResult(
        lo,
        hi,
        run(lo),
        run(hi),
        mid,
        s,
        False,
        tuple(envelopes),
        tuple(trace),
        len(cache),
    )


# ---------------------------------------------------------------------------
# orderly structured sets


@dataclass(frozen=True)
class OrderlyStructured:
    """Ordered tight pairs ``B'`` with indices ``ell >= ell_prime``.

    ``pairs`` holds ``ell + 1`` entries; the last one is the special pair.
    Prefixes ``B'_q`` are the first ``q`` entries.
    """

    pairs: tuple[Pair, ...]
    ell: int
    ell_prime: int
    dual: DualSolution
    branch: str = "left"
    crossing: int = 0

    @property
    def special(self) -> Pair:
        return self.pairs[self.ell]

    def prefix(self, q: int) -> tuple[Pair, ...]:
        if not 0 <= q <= self.ell:
            raise ValueError(f"prefix length {q} outside [0, {self.ell}]")
        return self.pairs[:q]


class TiedCrossingError(InternalError):
    """Both runs end on the same pair, so no orderly structure separates them.

    This happens when two pairs turn tight at the same moment at the
    crossing; the run with fewer components is still a feasible answer.
    """


def covering_procedure(
    instance: MetricInstance, seed: Sequence[Pair], sequence: Sequence[Pair]
) -> list[Pair]:
    """Append pairs of ``sequence`` to ``seed`` until at most ``m`` points are uncovered."""
    out = list(seed)
    seen = set(out)
    active = instance.active_mask
    cover = 0
    for p in out:
        cover |= instance.pair_mask(p)
    if popcount(active & ~cover) <= instance.m:
        return out
    for p in sequence:
        if p in seen:
            continue
        out.append(p)
        seen.add(p)
        cover |= instance.pair_mask(p)
        if popcount(active & ~cover) <= instance.m:
            return out
    raise InternalError("covering sequence leaves too many points uncovered")


def mix_orderly_structured(instance: MetricInstance, fix: FixpointResult) -> OrderlyStructured:
    """Combine an endpoint run with the interior run into an orderly structured set."""
    if fix.degenerate or fix.run_mid is None or fix.run_hi is None:
        raise ValueError("mixing needs a non-degenerate search result")
    k_prime = instance.k
    mid = fix.run_mid
    if not mid.more(k_prime):
        more, less, witness, branch = fix.run_lo, mid, fix.run_lo, "left"
    else:
        more, less, witness, branch = mid, fix.run_hi, fix.run_hi, "right"
    more_body = set(more.picked[:-1])
    less_body = set(less.picked[:-1])
    shared = sorted(more_body & less_body)
    shared_set = set(shared)
    less_seq = [p for p in less.picked if p not in shared_set]
    more_seq = [p for p in more.picked if p not in shared_set]

    results = []
    for i in range(len(less_seq) + 1):
        q = covering_procedure(instance, shared, less_seq[i:] + more_seq)
        results.append((q, count_components(instance, q)))
    if set(results[0][0]) != set(less.picked) or set(results[-1][0]) != set(more.picked):
        raise InternalError("covering procedure does not reproduce the two runs")
    star = None
    for i in range(len(results) - 1):
        if results[i][1] <= k_prime < results[i + 1][1]:
            star = i
            break
    if star is None:
        raise InternalError(f"no component crossing among {[c for _, c in results]}")
    special = less_seq[star]
    body = results[star + 1][0]
    if special in body:
        raise TiedCrossingError(f"special pair {special} already in the next covering set")
    inner = results[star][0]
    ell_prime = len(inner) - 1
    if body[:ell_prime] != [p for p in inner if p != special]:
        raise InternalError("shorter covering set is not a prefix of the longer one")
    os_ = OrderlyStructured(tuple(body) + (special,), len(body), ell_prime, witness.dual, branch, star)
    problems = orderly_violations(instance, os_)
    if problems:
        raise InternalError("; ".join(problems))
    return os_


def orderly_violations(instance: MetricInstance, os_: OrderlyStructured) -> list[str]:
    """Check the three orderly-structured conditions; returns the failures."""
    k_prime, m = instance.k, instance.m
    dual = os_.dual
    problems = []
    if dual.gamma is None:
        problems.append("dual has no gamma")
        return problems
    if not os_.ell_prime <= os_.ell:
        problems.append(f"ell' = {os_.ell_prime} exceeds ell = {os_.ell}")
        return problems
    special = os_.special
    if special in os_.pairs[: os_.ell]:
        problems.append("special pair repeats inside B'_ell")
    for j in iter_bits(uncovered_mask(instance, os_.prefix(os_.ell_prime))):
        if dual.a(j) != dual.gamma:
            problems.append(f"OS1: point {j} uncovered by B'_ell' is not tight")
    for p in os_.pairs:
        if slack(instance, dual, p) != 0:
            problems.append(f"OS1: pair {p} is not tight")
    for h in range(os_.ell):
        if count_uncovered(instance, os_.prefix(h)) <= m:
            problems.append(f"OS2: B'_{h} already leaves at most m points uncovered")
    for h in range(os_.ell_prime, os_.ell + 1):
        if count_uncovered(instance, os_.prefix(h) + (special,)) > m:
            problems.append(f"OS2: B'_{h} with the special pair leaves more than m points uncovered")
    big = count_components(instance, os_.prefix(os_.ell))
    small = count_components(instance, os_.prefix(os_.ell_prime) + (special,))
    if not big > k_prime:
        problems.append(f"OS3: B'_ell has only {big} components")
    if not small <= k_prime:
        problems.append(f"OS3: B'_ell' with the special pair has {small} components")
    return problems
