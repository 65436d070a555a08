"""Ground truth and experiment fabric.

Holds the exhaustive oracle, the tight-instance family, a portable seeded
instance generator, diameter evaluation and batch ratio reports.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import networkx as nx

from .dual import sum_of_radii
from .metric import (
    UNREACHABLE,
    Cardinality,
    LowerBoundSpec,
    MetricInstance,
    Pair,
    candidate_pairs,
    euclidean_instance,
    iter_bits,
    popcount,
)
from .rounding import Solution

MASK64 = (1 << 64) - 1


class SplitMix64:
    """The SplitMix64 generator (Steele, Lea and Flood).

    Each call adds ``0x9E3779B97F4A7C15`` to the 64-bit state and returns
    the state passed through two xor-shift-multiply rounds and a final
    xor-shift.  It is specified here so instance digests do not depend on
    the host's random module.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def unit(self) -> Fraction:
        """A dyadic rational uniform on ``[0, 1)`` with 53 bits."""
        return Fraction(self.next() >> 11, 1 << 53)

    def below(self, bound: int) -> int:
        return self.next() % bound


def random_instance(
    n: int,
    dim: int = 2,
    k: int = 2,
    m: int = 0,
    lower_bound: int | LowerBoundSpec | None = None,
    seed: int = 0,
) -> MetricInstance:
    """``n`` uniform points in the unit cube, rationalized exactly.

    ``lower_bound`` may be an integer ``L`` meaning a cardinality bound of
    ``L`` at every center.
    """
    if n < 1 or dim < 1:
        raise ValueError("need n >= 1 and dim >= 1")
    rng = SplitMix64(seed)
    points = [[rng.unit() for _ in range(dim)] for _ in range(n)]
    lb = Cardinality((lower_bound,) * n) if isinstance(lower_bound, int) else lower_bound
    return euclidean_instance(points, k=k, m=m, lower_bounds=lb)


def tight_point_ids(h: int, copy: int = 0) -> tuple[list[int], dict[tuple[int, int], int]]:
    """Ids of ``v_1..v_h`` and of ``v_ij`` in one copy of the tight graph."""
    base = copy * (h + h * h)
    hubs = [base + a for a in range(h)]
    grid = {(i, j): base + h + (i - 1) * h + (j - 1) for i in range(1, h + 1) for j in range(1, h + 1)}
    return hubs, grid


def tight_instance(h: int, k: int) -> MetricInstance:
    """``k`` disjoint copies of the tight graph with ``h + h^2`` vertices each.

    Hub ``v_a`` is joined to every ``v_ij`` with ``i != a``; distances are
    shortest-path lengths and distances across copies are unreachable.
    """
    if h < 3:
        raise ValueError("the tight family needs h >= 3")
    if k < 1:
        raise ValueError("need k >= 1")
    size = h + h * h
    n = k * size
    rows = [[UNREACHABLE] * n for _ in range(n)]
    for c in range(k):
        hubs, grid = tight_point_ids(h, c)
        g = nx.Graph()
        g.add_nodes_from(range(c * size, (c + 1) * size))
        for a in range(1, h + 1):
            for (i, _), v in grid.items():
                if i != a:
                    g.add_edge(hubs[a - 1], v)
        for u, lengths in nx.all_pairs_shortest_path_length(g):
            for v, d in lengths.items():
                rows[u][v] = Fraction(d)
    return MetricInstance(tuple(tuple(r) for r in rows), k=k, m=0)


def diameter_cost(instance: MetricInstance, solution: Solution) -> Fraction:
    """Sum over clusters of the largest distance between two members."""
    clusters: dict[int, list[int]] = {}
    for j, c in solution.assignment.items():
        if c is not None:
            clusters.setdefault(c, []).append(j)
    total = Fraction(0)
    for members in clusters.values():
        diam = Fraction(0)
        for a, b in itertools.combinations(members, 2):
            d = instance.d(a, b)
            if d > diam:
                diam = d
        total += diam
    return total


# ---------------------------------------------------------------------------
# exhaustive oracle


@dataclass(frozen=True)
class OracleResult:
    cost: Fraction
    solution: Solution
    subsets: int


def _count_subsets(size: int, k: int) -> int:
    return sum(math.comb(size, t) for t in range(k + 1))


def _cardinality_assignment(instance: MetricInstance, chosen: Sequence[Pair]) -> dict[int, int] | None:
    """Augmenting-path b-matching: center ``c`` gets ``L_c`` points of its ball."""
    bounds = instance.lower_bounds.bounds
    slots = []
    for p in chosen:
        slots.extend([p] * bounds[p.center])
    owner: dict[int, int] = {}

    def augment(s: int, seen: set[int]) -> bool:
        p = slots[s]
        for j in iter_bits(instance.pair_mask(p)):
            if j in seen:
                continue
            seen.add(j)
            if j not in owner or augment(owner[j], seen):
                owner[j] = s
                return True
        return False

    for s in range(len(slots)):
        if not augment(s, set()):
            return None
    return {j: slots[s].center for j, s in owner.items()}


def _nearest_assignment(instance: MetricInstance, chosen: Sequence[Pair], cover: int) -> dict[int, int]:
    assignment = {}
    for j in iter_bits(cover):
        best = min(
            (p for p in chosen if instance.d(p.center, j) <= p.radius),
            key=lambda p: (instance.d(p.center, j), p.center),
        )
        assignment[j] = best.center
    return assignment


def _served_ok(instance: MetricInstance, chosen: Sequence[Pair], assignment: dict[int, int]) -> bool:
    served = {p.center: 0 for p in chosen}
    for j, c in assignment.items():
        served[c] |= 1 << j
    return all(instance.allows(c, mk) for c, mk in served.items())


def _glb_assignment(
    instance: MetricInstance, chosen: Sequence[Pair], cover: int, exhaustive_limit: int
) -> dict[int, int] | None:
    if not chosen:
        return {}
    if isinstance(instance.lower_bounds, Cardinality):
        base = _cardinality_assignment(instance, chosen)
        if base is None:
            return None
        # spare covered points join any covering center; supersets stay allowed
        for j in iter_bits(cover):
            if j not in base:
                base[j] = next(p.center for p in chosen if instance.d(p.center, j) <= p.radius)
        return base
    nearest = _nearest_assignment(instance, chosen, cover)
    if _served_ok(instance, chosen, nearest):
        return nearest
    if instance.n > exhaustive_limit:
        raise OracleDeclined("exhaustive assignment is too large")
    points = list(iter_bits(cover))
    options = [[p.center for p in chosen if instance.d(p.center, j) <= p.radius] for j in points]
    for combo in itertools.product(*options):
        assignment = dict(zip(points, combo))
        if _served_ok(instance, chosen, assignment):
            return assignment
    return None


class OracleDeclined(Exception):
    """The exhaustive search would exceed its budget."""


def brute_force_opt(
    instance: MetricInstance,
    max_subsets: int = 10**7,
    reverse: bool = False,
    exhaustive_limit: int = 12,
) -> OracleResult | None:
    """Exact optimum by enumerating sets of at most ``k`` candidate pairs.

    Centers are distinct.  Branch and bound on the partial cost skips
    supersets of feasible sets and sets already as expensive as the best
    one.  Returns ``None`` when the subset count exceeds ``max_subsets`` or a
    lower-bound check would be too expensive; ``reverse`` enumerates the
    pairs in the opposite order as an independent cross-check.
    """
    pairs = list(candidate_pairs(instance))
    if reverse:
        pairs.reverse()
    k = instance.k
    if _count_subsets(len(pairs), k) > max_subsets:
        return None
    active = instance.active_mask
    m = instance.m
    masks = [instance.pair_mask(p) for p in pairs]
    has_lb = instance.lower_bounds is not None
    best_cost: Fraction | None = None
    best_pairs: tuple[Pair, ...] = ()
    best_assign: dict[int, int] | None = None
    visited = 0
    chosen: list[Pair] = []
    used: set[int] = set()

    def visit(start: int, cover: int, cost: Fraction) -> None:
        nonlocal best_cost, best_pairs, best_assign, visited
        visited += 1
        if popcount(active & ~cover) <= m:
            assign = _glb_assignment(instance, chosen, cover, exhaustive_limit) if has_lb else None
            if not has_lb or assign is not None:
                if best_cost is None or cost < best_cost:
                    best_cost, best_pairs, best_assign = cost, tuple(chosen), assign
            return
        if len(chosen) == k:
            return
        for t in range(start, len(pairs)):
            p = pairs[t]
            if p.center in used:
                continue
            if best_cost is not None and cost + p.radius >= best_cost:
                continue
            chosen.append(p)
            used.add(p.center)
            visit(t + 1, cover | masks[t], cost + p.radius)
            chosen.pop()
            used.discard(p.center)

    try:
        visit(0, 0, Fraction(0))
    except OracleDeclined:
        return None
    if best_cost is None:
        raise ValueError("instance has no feasible solution")
    ordered = tuple(sorted(best_pairs))
    if has_lb:
        assignment: dict[int, int | None] = dict(best_assign or {})
        for j in instance.active_points:
            assignment.setdefault(j, None)
        radius = {p.center: p.radius for p in ordered}
        sol = Solution(ordered, assignment, sum_of_radii(ordered))
        assert all(c is None or instance.d(c, j) <= radius[c] for j, c in assignment.items())
    else:
        sol = Solution.from_pairs(instance, ordered)
    return OracleResult(best_cost, sol, visited)


# ---------------------------------------------------------------------------
# batch reports


@dataclass(frozen=True)
class BatchSpec:
    """Parameters of a benchmark batch.

    ``suite`` is ``"random"`` (seeds ``seed .. seed + count - 1``) or
    ``"tight"`` (one instance per ``h`` in ``hs`` with ``k`` copies).
    """

    suite: str = "random"
    n: int = 8
    dim: int = 2
    k: int = 2
    m: int = 0
    count: int = 10
    seed: int = 0
    mode: str = "plain"
    guess: int = 0
    oracle: bool = False
    lower_bound: int | None = None
    hs: tuple[int, ...] = (3, 4, 5, 6)

    def instances(self) -> Iterator[MetricInstance]:
        if self.suite == "random":
            for t in range(self.count):
                yield random_instance(self.n, self.dim, self.k, self.m, self.lower_bound, self.seed + t)
        elif self.suite == "tight":
            for h in self.hs:
                yield tight_instance(h, self.k)
        else:
            raise ValueError(f"unknown suite {self.suite!r}")


@dataclass(frozen=True)
class BenchRow:
    index: int
    digest: str
    mode: str
    cost: Fraction
    oracle: Fraction | None
    dual_objective: Fraction | None
    ratio: Fraction | None
    primal_dual_ratio: Fraction | None
    feasible: bool
    wall_time: float

    def record(self, with_time: bool = True) -> dict:
        def s(x):
            return None if x is None else str(x)

        out = {
            "index": self.index,
            "digest": self.digest,
            "mode": self.mode,
            "cost": s(self.cost),
            "oracle": s(self.oracle),
            "dual_objective": s(self.dual_objective),
            "ratio": s(self.ratio),
            "primal_dual_ratio": s(self.primal_dual_ratio),
            "feasible": self.feasible,
        }
        if with_time:
            out["wall_time"] = round(self.wall_time, 6)
        return out


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...] = ()
    spec: BatchSpec | None = field(default=None, compare=False)

    def aggregate(self) -> dict:
        ratios = [r.ratio for r in self.rows if r.ratio is not None]
        return {
            "rows": len(self.rows),
            "feasible": sum(r.feasible for r in self.rows),
            "with_oracle": len(ratios),
            "max_ratio": None if not ratios else str(max(ratios)),
            "mean_ratio": None if not ratios else str(sum(ratios, Fraction(0)) / len(ratios)),
        }

    def to_dict(self, with_time: bool = True) -> dict:
        return {
            "rows": [r.record(with_time) for r in self.rows],
            "aggregate": self.aggregate(),
        }

    def digest(self) -> str:
        """Hash of the report without wall times."""
        text = json.dumps(self.to_dict(with_time=False), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()

    def table(self) -> str:
        head = f"{'#':>4} {'digest':<12} {'cost':>14} {'oracle':>14} {'ratio':>10} {'time[s]':>8}"
        lines = [head]
        for r in self.rows:
            ratio = "" if r.ratio is None else f"{float(r.ratio):.4f}"
            oracle = "" if r.oracle is None else f"{float(r.oracle):.6g}"
            lines.append(
                f"{r.index:>4} {r.digest[:12]:<12} {float(r.cost):>14.6g} {oracle:>14} {ratio:>10} {r.wall_time:>8.3f}"
            )
        return "\n".join(lines)


def ratio_report(spec: BatchSpec) -> BenchReport:
    """Run the solver (and optionally the oracle) on every instance of a batch."""
    from .io import instance_digest
    from .rounding import validate_solution
    from .solver import solve

    rows = []
    for t, inst in enumerate(spec.instances()):
        start = time.perf_counter()
        res = solve(inst, spec.mode, spec.guess)
        elapsed = time.perf_counter() - start
        oracle = None
        if spec.oracle:
            got = brute_force_opt(inst)
            oracle = None if got is None else got.cost
        ratio = None
        if oracle is not None:
            ratio = Fraction(1) if oracle == 0 and res.cost == 0 else (res.cost / oracle if oracle else None)
        pd_ratio = None
        if res.dual_objective:
            pd_ratio = res.cost / res.dual_objective
        rows.append(
            BenchRow(
                t,
                instance_digest(inst),
                spec.mode,
                res.cost,
                oracle,
                res.dual_objective,
                ratio,
                pd_ratio,
                not validate_solution(inst, res.solution),
                elapsed,
            )
        )
    return BenchReport(tuple(rows), spec)
