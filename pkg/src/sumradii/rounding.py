"""From tight pair sets to feasible clusterings.

Every component of a pair set is replaced by a single ball that contains all
points of the component.  The module also holds the assignment procedure for
lower bounds and the component-graph diagnostics used to audit the radius
bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .dual import (
    DualSolution,
    component_points,
    components,
    count_components,
    count_uncovered,
    covered_mask,
    sum_of_radii,
)
from .metric import UNREACHABLE, InternalError, MetricInstance, Pair, iter_bits, popcount
from .outliers import OrderlyStructured
from .primal_dual import StructuredPairs

ZERO = Fraction(0)


class CoverMode(str, Enum):
    ANY_CENTER = "any"
    COLOCATED = "colocated"


ANY_CENTER = CoverMode.ANY_CENTER
COLOCATED = CoverMode.COLOCATED


@dataclass(frozen=True)
class Solution:
    """Chosen pairs, the point assignment and the total radius.

    ``assignment`` maps points to a chosen center, or to ``None`` for an
    outlier.  Every active point appears as a key.
    """

    pairs: tuple[Pair, ...]
    assignment: Mapping[int, int | None]
    cost: Fraction

    @property
    def outliers(self) -> tuple[int, ...]:
        return tuple(sorted(j for j, c in self.assignment.items() if c is None))

    @classmethod
    def from_pairs(cls, instance: MetricInstance, pairs: Sequence[Pair]) -> Solution:
        """Assign every active point to the first pair whose ball holds it."""
        pairs = tuple(pairs)
        masks = [instance.pair_mask(p) for p in pairs]
        assignment: dict[int, int | None] = {}
        for j in instance.active_points:
            assignment[j] = None
            for p, mk in zip(pairs, masks):
                if mk >> j & 1:
                    assignment[j] = p.center
                    break
        return cls(pairs, assignment, sum_of_radii(pairs))

    @classmethod
    def from_assignment(cls, instance: MetricInstance, assignment: Mapping[int, int | None]) -> Solution:
        """Open each used center with the radius of its farthest client."""
        radius: dict[int, Fraction] = {}
        for j, c in assignment.items():
            if c is None:
                continue
            d = instance.d(c, j)
            if c not in radius or d > radius[c]:
                radius[c] = d
        pairs = tuple(sorted(Pair(r, c) for c, r in radius.items()))
        return cls(pairs, dict(assignment), sum_of_radii(pairs))


@dataclass(frozen=True)
class ComponentCover:
    """How one component was covered.

    ``witness`` is the smallest pair of the component at the chosen center
    (colocated covering only).
    """

    component: tuple[Pair, ...]
    pair: Pair
    witness: Pair | None = None


def _eccentricity(instance: MetricInstance, center: int, points: int) -> Fraction | float:
    row = instance.distances[center]
    best: Fraction | float = ZERO
    for j in iter_bits(points):
        if row[j] > best:
            best = row[j]
    return best


def cover_component(
    instance: MetricInstance, component: Sequence[Pair], mode: CoverMode = ANY_CENTER
) -> Pair:
    """Cheapest single ball containing every point of the component.

    Any point may be the center under ``ANY_CENTER``; only centers of the
    component's pairs under ``COLOCATED``.  With lower bounds the radius is
    raised to the center's ``d_i``.  Ties go to the smaller center id.
    """
    if not component:
        raise ValueError("empty component")
    points = component_points(instance, component)
    if mode == ANY_CENTER:
        centers: Iterable[int] = range(instance.n)
    else:
        centers = sorted({p.center for p in component})
    floors = instance.center_floor
    best = None
    for i in centers:
        floor = floors[i]
        if floor is None:
            continue
        ecc = _eccentricity(instance, i, points)
        if ecc == UNREACHABLE:
            continue
        r = max(ecc, floor)
        if best is None or (r, i) < best:
            best = (r, i)
    if best is None:
        raise InternalError(f"no single ball covers component {component}")
    return Pair(best[0], best[1])


def cover_components(
    instance: MetricInstance, pairs: Iterable[Pair], mode: CoverMode = ANY_CENTER
) -> list[ComponentCover]:
    out = []
    for comp in components(instance, pairs):
        chosen = cover_component(instance, comp, mode)
        witness = None
        if mode == COLOCATED:
            witness = min(p for p in comp if p.center == chosen.center)
        out.append(ComponentCover(comp, chosen, witness))
    return out


def creplaced(instance: MetricInstance, pairs: Iterable[Pair], mode: CoverMode = ANY_CENTER) -> list[Pair]:
    """One covering pair per component of ``pairs``."""
    return [c.pair for c in cover_components(instance, pairs, mode)]


@dataclass(frozen=True)
class Assembly:
    """A residual solution with the covers it was built from."""

    solution: Solution
    covers: tuple[ComponentCover, ...]
    case: int | None = None

    @property
    def pairs(self) -> tuple[Pair, ...]:
        return tuple(c.pair for c in self.covers)

    @property
    def witnesses(self) -> tuple[Pair | None, ...]:
        return tuple(c.witness for c in self.covers)


def _finish(instance: MetricInstance, covers: list[ComponentCover], case: int | None) -> Assembly:
    sol = Solution.from_pairs(instance, [c.pair for c in covers])
    if len(sol.pairs) > instance.k:
        raise InternalError(f"{len(sol.pairs)} pairs exceed k' = {instance.k} (case {case})")
    if len(sol.outliers) > instance.m:
        raise InternalError(f"{len(sol.outliers)} outliers exceed m = {instance.m} (case {case})")
    return Assembly(sol, tuple(covers), case)


def assemble_no_outliers(
    instance: MetricInstance, sp: StructuredPairs, mode: CoverMode = ANY_CENTER
) -> Assembly:
    """Cover each component of ``B'`` by one ball.

    The components of ``B'`` are the components of ``B'`` without the special
    pair that it does not touch, plus one merged component around it.
    """
    return _finish(instance, cover_components(instance, sp.pairs, mode), None)


def outlier_case(instance: MetricInstance, os_: OrderlyStructured) -> tuple[int, tuple[Pair, ...]]:
    """Pick the pair set to round among the prefixes of ``B'``."""
    ell, ell_p, special = os_.ell, os_.ell_prime, os_.special
    k_prime = instance.k
    if ell_p == ell:
        return 1, os_.prefix(ell) + (special,)
    if ell_p == ell - 1:
        return 2, os_.prefix(ell - 1) + (special,)
    if count_components(instance, os_.prefix(ell) + (special,)) > k_prime:
        for h in range(ell_p, ell):
            if count_components(instance, os_.prefix(h + 1) + (special,)) > k_prime:
                return 3, os_.prefix(h) + (special,)
        raise InternalError("no component crossing among the prefixes")
    return 4, os_.prefix(ell) + (special,)


def assemble_outliers(
    instance: MetricInstance, os_: OrderlyStructured, mode: CoverMode = ANY_CENTER
) -> Assembly:
    case, chosen = outlier_case(instance, os_)
    return _finish(instance, cover_components(instance, chosen, mode), case)


def assemble_pairs(instance: MetricInstance, pairs: Sequence[Pair], mode: CoverMode = ANY_CENTER) -> Assembly:
    """Cover the components of an arbitrary feasible pair set."""
    return _finish(instance, cover_components(instance, pairs, mode), None)


# ---------------------------------------------------------------------------
# lower bounds


def glb_assign(
    instance: MetricInstance,
    pairs: Sequence[Pair],
    witnesses: Sequence[Pair],
    guessed: Sequence[Pair] = (),
) -> dict[int, int | None]:
    """Assign points to centers so every center meets its lower bound.

    ``witnesses[t]`` is a pair at the center of ``pairs[t]`` with a smaller or
    equal radius whose ball is an allowed client set; the witness balls must
    be pairwise disjoint.  Guessed pairs are merged into the solution pairs
    they touch, and leftover guessed components keep their own center.
    """
    if len(pairs) != len(witnesses):
        raise ValueError("one witness per pair is required")
    assignment: dict[int, int | None] = {}
    seen = 0
    for p, w in zip(pairs, witnesses):
        if w.center != p.center or w.radius > p.radius:
            raise ValueError(f"witness {w} does not fit {p}")
        mask = instance.pair_mask(w)
        if mask & seen:
            raise ValueError("witness balls overlap")
        seen |= mask
        for j in iter_bits(mask):
            assignment[j] = p.center

    remaining = list(guessed)
    for p in pairs:
        group = components(instance, remaining + [p])
        comp = next(c for c in group if p in c)
        for j in iter_bits(covered_mask(instance, comp)):
            assignment.setdefault(j, p.center)
        # every guessed pair touching a newly assigned point lies in comp
        remaining = [q for q in remaining if q not in comp]

    for comp in components(instance, remaining):
        center = comp[0].center
        for j in iter_bits(covered_mask(instance, comp)):
            assignment.setdefault(j, center)

    for j in instance.active_points:
        assignment.setdefault(j, None)

    sol = Solution.from_assignment(instance, assignment)
    bound = sum_of_radii(pairs) + 2 * sum_of_radii(guessed)
    if sol.cost > bound:
        raise InternalError(f"assignment cost {sol.cost} exceeds {bound}")
    problems = _lower_bound_violations(instance, assignment)
    if problems:
        raise InternalError("; ".join(problems))
    return assignment


def _lower_bound_violations(instance: MetricInstance, assignment: Mapping[int, int | None]) -> list[str]:
    if instance.lower_bounds is None:
        return []
    served: dict[int, int] = {}
    for j, c in assignment.items():
        if c is not None:
            served[c] = served.get(c, 0) | 1 << j
    return [
        f"center {c} serves a set outside its allowed family"
        for c, mask in sorted(served.items())
        if not instance.allows(c, mask)
    ]


def validate_solution(instance: MetricInstance, solution: Solution) -> list[str]:
    """Report every way ``solution`` fails to be feasible for ``instance``."""
    problems = []
    if len(solution.pairs) > instance.k:
        problems.append(f"{len(solution.pairs)} pairs exceed k = {instance.k}")
    outliers = [j for j in instance.active_points if solution.assignment.get(j) is None]
    if len(outliers) > instance.m:
        problems.append(f"{len(outliers)} outliers exceed m = {instance.m}")
    radius: dict[int, Fraction] = {}
    for p in solution.pairs:
        radius[p.center] = max(radius.get(p.center, ZERO), p.radius)
    for j, c in solution.assignment.items():
        if c is None:
            continue
        if c not in radius:
            problems.append(f"point {j} assigned to unopened center {c}")
        elif instance.d(c, j) > radius[c]:
            problems.append(f"point {j} lies outside the ball of center {c}")
    problems.extend(_lower_bound_violations(instance, solution.assignment))
    if solution.cost != sum_of_radii(solution.pairs):
        problems.append("cost differs from the sum of radii")
    return problems


# ---------------------------------------------------------------------------
# diagnostics


def max_disjoint_subset(
    instance: MetricInstance, component: Sequence[Pair], exact_limit: int = 20
) -> tuple[tuple[Pair, ...], bool]:
    """Pairwise-disjoint subset of maximum total radius.

    Exact branch and bound up to ``exact_limit`` pairs; above that a greedy
    choice by decreasing radius, flagged by a ``False`` second value.
    """
    items = sorted(set(component), key=lambda p: (-p.radius, p.center))
    masks = [instance.pair_mask(p) for p in items]
    if len(items) > exact_limit:
        chosen, used = [], 0
        for p, mk in zip(items, masks):
            if not mk & used:
                chosen.append(p)
                used |= mk
        return tuple(chosen), False
    suffix = [ZERO] * (len(items) + 1)
    for t in range(len(items) - 1, -1, -1):
        suffix[t] = suffix[t + 1] + items[t].radius
    best_val = Fraction(-1)
    best: list[int] = []
    stack: list[int] = []

    def search(t: int, used: int, val: Fraction) -> None:
        nonlocal best_val, best
        if val > best_val:
            best_val, best = val, list(stack)
        if t == len(items) or val + suffix[t] <= best_val:
            return
        if not masks[t] & used:
            stack.append(t)
            search(t + 1, used | masks[t], val + items[t].radius)
            stack.pop()
        search(t + 1, used, val)

    search(0, 0, ZERO)
    # make the optimum maximal; only zero-radius pairs can still fit
    used = 0
    for t in best:
        used |= masks[t]
    for t, mk in enumerate(masks):
        if t not in best and not mk & used:
            best.append(t)
            used |= mk
    return tuple(items[t] for t in sorted(best)), True


@dataclass(frozen=True)
class ComponentGraph:
    graph: nx.Graph
    antichain: tuple[Pair, ...]


def component_graph(instance: MetricInstance, component: Sequence[Pair]) -> ComponentGraph:
    """Weighted graph on pair, point and frontier vertices of a component.

    Pairs whose ball lies inside another kept ball are dropped; their points
    remain as point vertices.
    """
    ordered = sorted(set(component), key=lambda p: (-popcount(instance.pair_mask(p)), p))
    kept: list[Pair] = []
    kept_masks: list[int] = []
    for p in ordered:
        mk = instance.pair_mask(p)
        if any(mk & ~other == 0 for other in kept_masks):
            continue
        kept.append(p)
        kept_masks.append(mk)
    g = nx.Graph()
    for j in iter_bits(covered_mask(instance, component)):
        g.add_node(("p", j))
    for p, mk in zip(kept, kept_masks):
        g.add_edge(("b", p), ("t", p), weight=p.radius)
        for j in iter_bits(mk):
            g.add_edge(("b", p), ("p", j), weight=p.radius)
    return ComponentGraph(g, tuple(sorted(kept)))


def graph_radius(cg: ComponentGraph) -> tuple[tuple, Fraction]:
    """Minimum eccentricity over pair and point vertices."""
    best = None
    for u, lengths in nx.all_pairs_dijkstra_path_length(cg.graph, weight="weight"):
        if u[0] == "t":
            continue
        ecc = max(lengths.values(), default=ZERO)
        key = (ecc, u[0], u[1])
        if best is None or key < best:
            best = key
    if best is None:
        raise ValueError("empty component graph")
    return (best[1], best[2]), Fraction(best[0])


def point_of(vertex: tuple) -> int:
    kind, item = vertex
    return item if kind == "p" else item.center


@dataclass(frozen=True)
class CoverDiagnostic:
    component: tuple[Pair, ...]
    radius: Fraction
    disjoint: tuple[Pair, ...]
    exact: bool
    graph_radius: Fraction

    @property
    def disjoint_sum(self) -> Fraction:
        return sum_of_radii(self.disjoint)

    def factor_holds(self, factor: Fraction) -> bool:
        return self.radius <= factor * self.disjoint_sum


def diagnose_cover(instance: MetricInstance, cover: ComponentCover) -> CoverDiagnostic:
    disjoint, exact = max_disjoint_subset(instance, cover.component)
    _, rad = graph_radius(component_graph(instance, cover.component))
    return CoverDiagnostic(cover.component, cover.pair.radius, disjoint, exact, rad)


def disjoint_charge_holds(
    instance: MetricInstance, dual: DualSolution, pairs: Sequence[Pair], tight_points: Iterable[int]
) -> bool:
    """``sr(B') <= sum(alpha) - |B'| lambda - |U| gamma`` for disjoint tight ``B'``."""
    gamma = dual.gamma if dual.gamma is not None else ZERO
    points = list(tight_points)
    rhs = sum(dual.alpha.values(), ZERO) - len(pairs) * dual.lam - len(points) * gamma
    return sum_of_radii(pairs) <= rhs


def uncovered_count(instance: MetricInstance, pairs: Iterable[Pair]) -> int:
    return count_uncovered(instance, pairs)
