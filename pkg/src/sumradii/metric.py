"""Metric instances, candidate pairs and lower-bound families.

Every distance is an exact :class:`fractions.Fraction`.  Unreachable
pairs of points (for example across the disjoint copies of a tight
instance) carry the sentinel :data:`UNREACHABLE`, which is ``math.inf``
and therefore compares greater than every rational.

Point sets are handled internally as Python ``int`` bitmasks: bit ``j`` is
set when point ``j`` belongs to the set.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Mapping, Sequence, Union

UNREACHABLE = math.inf

Distance = Union[Fraction, float]


class InfeasibleError(Exception):
    """The requested configuration admits no feasible solution."""


class InternalError(AssertionError):
    """An invariant that the algorithms guarantee was violated."""


def popcount(mask: int) -> int:
    return mask.bit_count()


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(points) -> int:
    mask = 0
    for j in points:
        mask |= 1 << j
    return mask


def to_fraction(value) -> Fraction:
    """Parse an int, Fraction, float or ``"p/q"`` string exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not distances")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(value)
    raise TypeError(f"cannot read {value!r} as a rational")


def to_distance(value) -> Distance:
    if value is None or value == "inf" or (isinstance(value, float) and value == math.inf):
        return UNREACHABLE
    return to_fraction(value)


@dataclass(frozen=True, order=True)
class Pair:
    """A candidate cluster: a center with a radius.

    Pairs sort by ``(radius, center)``, which is the fixed total order on the
    candidate universe.  Candidate pairs are deduplicated per center and
    radius, so the defining point never takes part in comparisons.
    """

    radius: Fraction
    center: int

    def __post_init__(self) -> None:
        if isinstance(self.radius, float) and not math.isfinite(self.radius):
            raise ValueError("the unreachable sentinel is not a valid radius")
        r = to_fraction(self.radius)
        if r < 0:
            raise ValueError(f"negative radius {r}")
        object.__setattr__(self, "radius", r)
        if self.center < 0:
            raise ValueError(f"invalid center {self.center}")

    def __repr__(self) -> str:
        return f"Pair({self.center}, {self.radius})"


# ---------------------------------------------------------------------------
# lower-bound families


@dataclass(frozen=True)
class Cardinality:
    """Center ``i`` must serve at least ``bounds[i]`` points."""

    bounds: tuple[int, ...]

    variant = "cardinality"

    def __post_init__(self) -> None:
        object.__setattr__(self, "bounds", tuple(int(b) for b in self.bounds))
        if any(b < 0 for b in self.bounds):
            raise ValueError("cardinality bounds must be nonnegative")

    def allows(self, instance: MetricInstance, center: int, mask: int) -> bool:
        return popcount(mask) >= self.bounds[center]

    def min_radius(self, instance: MetricInstance, center: int) -> Fraction | None:
        need = self.bounds[center]
        row = instance.sorted_row(center)
        if need == 0:
            return Fraction(0)
        if need > len(row):
            return None
        return row[need - 1][0]


@dataclass(frozen=True)
class ColoredWeight:
    """Per-color weight minimums for every potential center.

    ``minimums[i]`` maps a color to the total weight of that color that
    center ``i`` must serve.  A center missing from ``minimums`` (or mapped
    to an empty dict) has no requirement.
    """

    weights: tuple[Fraction, ...]
    colors: tuple[int, ...]
    minimums: tuple[Mapping[int, Fraction], ...]

    variant = "colored_weight"

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(to_fraction(w) for w in self.weights))
        object.__setattr__(self, "colors", tuple(int(c) for c in self.colors))
        mins = tuple(
            {int(c): to_fraction(v) for c, v in dict(entry).items()} for entry in self.minimums
        )
        object.__setattr__(self, "minimums", mins)
        if len(self.weights) != len(self.colors):
            raise ValueError("weights and colors must have the same length")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")

    def allows(self, instance: MetricInstance, center: int, mask: int) -> bool:
        got: dict[int, Fraction] = {}
        for j in iter_bits(mask):
            got[self.colors[j]] = got.get(self.colors[j], Fraction(0)) + self.weights[j]
        need = self.minimums[center]
        return all(got.get(c, Fraction(0)) >= w for c, w in need.items())

    def min_radius(self, instance: MetricInstance, center: int) -> Fraction | None:
        need = {c: w for c, w in self.minimums[center].items() if w > 0}
        if not need:
            return Fraction(0)
        got: dict[int, Fraction] = {}
        row = instance.sorted_row(center)
        idx = 0
        while idx < len(row):
            d = row[idx][0]
            # consume every point at this exact distance before testing
            while idx < len(row) and row[idx][0] == d:
                j = row[idx][1]
                got[self.colors[j]] = got.get(self.colors[j], Fraction(0)) + self.weights[j]
                idx += 1
            if all(got.get(c, Fraction(0)) >= w for c, w in need.items()):
                return d
        return None


@dataclass(frozen=True)
class ExplicitRadius:
    """The allowed sets at ``i`` are the supersets of ``B(i, radii[i])``.

    A radius of ``None`` marks a point that may not be a center.
    """

    radii: tuple[Fraction | None, ...]

    variant = "explicit_radius"

    def __post_init__(self) -> None:
        vals = tuple(None if r is None else to_fraction(r) for r in self.radii)
        if any(r is not None and r < 0 for r in vals):
            raise ValueError("radii must be nonnegative")
        object.__setattr__(self, "radii", vals)

    def allows(self, instance: MetricInstance, center: int, mask: int) -> bool:
        r = self.radii[center]
        if r is None:
            return False
        need = instance.ball_mask(center, r)
        return need & ~mask == 0

    def min_radius(self, instance: MetricInstance, center: int) -> Fraction | None:
        return self.radii[center]


LowerBoundSpec = Union[Cardinality, ColoredWeight, ExplicitRadius]


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class MetricInstance:
    """A finite metric space with clustering budgets.

    Parameters
    ----------
    distances:
        Square matrix of exact rationals, or :data:`UNREACHABLE`.  Symmetry
        and the triangle inequality are not enforced here; see
        :func:`verify_metric`.
    k:
        Number of clusters allowed.
    m:
        Number of points of the active set that may stay uncovered.
    lower_bounds:
        Optional lower-bound family.
    active:
        The points that must be covered (``X'``).  ``None`` means all points.
        Centers may always be any point.
    radius_cap:
        Largest radius a candidate pair may have.  ``None`` means the largest
        finite distance in the matrix.
    coordinates:
        Original coordinates of a Euclidean instance, kept only so the
        instance can be written back out.
    """

    distances: tuple[tuple[Distance, ...], ...]
    k: int
    m: int = 0
    lower_bounds: LowerBoundSpec | None = None
    active: frozenset[int] | None = None
    radius_cap: Fraction | None = None
    coordinates: tuple[tuple[Fraction, ...], ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        rows = tuple(tuple(to_distance(v) for v in row) for row in self.distances)
        n = len(rows)
        if n == 0:
            raise ValueError("an instance needs at least one point")
        for row in rows:
            if len(row) != n:
                raise ValueError("distance matrix must be square")
            for v in row:
                if v < 0:
                    raise ValueError("distances must be nonnegative")
        object.__setattr__(self, "distances", rows)
        if self.k < 0 or self.m < 0:
            raise ValueError("k and m must be nonnegative")
        if self.active is not None:
            act = frozenset(int(j) for j in self.active)
            if any(not 0 <= j < n for j in act):
                raise ValueError("active set contains an invalid point id")
            object.__setattr__(self, "active", act)
        if self.radius_cap is not None:
            object.__setattr__(self, "radius_cap", to_fraction(self.radius_cap))
        if self.lower_bounds is not None:
            size = _lb_size(self.lower_bounds)
            if size != n:
                raise ValueError(f"lower-bound spec covers {size} points, instance has {n}")

    @property
    def n(self) -> int:
        return len(self.distances)

    def d(self, i: int, j: int) -> Distance:
        return self.distances[i][j]

    @cached_property
    def active_points(self) -> tuple[int, ...]:
        if self.active is None:
            return tuple(range(self.n))
        return tuple(sorted(self.active))

    @cached_property
    def active_mask(self) -> int:
        return mask_of(self.active_points)

    @cached_property
    def max_finite_distance(self) -> Fraction:
        best = Fraction(0)
        for row in self.distances:
            for v in row:
                if v != UNREACHABLE and v > best:
                    best = v
        return best

    @property
    def cap(self) -> Fraction:
        """The radius cap in force for this instance."""
        if self.radius_cap is None:
            return self.max_finite_distance
        return self.radius_cap

    @cached_property
    def mu(self) -> Fraction:
        """Almost-tightness tolerance ``cap / |X|^2``."""
        return self.cap / (self.n * self.n)

    def sorted_row(self, i: int) -> list[tuple[Fraction, int]]:
        return self._rows[i][0]

    @cached_property
    def _rows(self) -> list[tuple[list[tuple[Fraction, int]], list[Fraction], list[int]]]:
        out = []
        for i in range(self.n):
            row = sorted((v, j) for j, v in enumerate(self.distances[i]) if v != UNREACHABLE)
            keys = [v for v, _ in row]
            prefix = [0]
            acc = 0
            for _, j in row:
                acc |= 1 << j
                prefix.append(acc)
            out.append((row, keys, prefix))
        return out

    def ball_mask(self, center: int, radius) -> int:
        """Bitmask of ``B(center, radius)`` over all points."""
        if not 0 <= center < self.n:
            raise ValueError(f"invalid point id {center}")
        _, keys, prefix = self._rows[center]
        return prefix[bisect.bisect_right(keys, radius)]

    def pair_mask(self, pair: Pair) -> int:
        return self.ball_mask(pair.center, pair.radius)

    @cached_property
    def center_floor(self) -> tuple[Fraction | None, ...]:
        """``d_i`` per point under the lower bounds (0 when there are none)."""
        if self.lower_bounds is None:
            return tuple(Fraction(0) for _ in range(self.n))
        return tuple(self.lower_bounds.min_radius(self, i) for i in range(self.n))

    def allows(self, center: int, mask: int) -> bool:
        if self.lower_bounds is None:
            return True
        return self.lower_bounds.allows(self, center, mask)

    def with_budgets(self, k: int | None = None, m: int | None = None) -> MetricInstance:
        return replace(
            self,
            k=self.k if k is None else k,
            m=self.m if m is None else m,
        )

    def standing_assumptions_hold(self) -> bool:
        """``0 <= m < |X'|`` and ``|X'| > k + m``."""
        size = len(self.active_points)
        return self.m < size and size > self.k + self.m


def _lb_size(lb: LowerBoundSpec) -> int:
    if isinstance(lb, Cardinality):
        return len(lb.bounds)
    if isinstance(lb, ColoredWeight):
        if len(lb.minimums) != len(lb.weights):
            raise ValueError("one minimum-weight entry is needed per point")
        return len(lb.weights)
    if isinstance(lb, ExplicitRadius):
        return len(lb.radii)
    raise TypeError(f"unknown lower-bound spec {lb!r}")


def ball(instance: MetricInstance, pair: Pair) -> frozenset[int]:
    """The points within ``pair.radius`` of ``pair.center``."""
    return frozenset(iter_bits(instance.pair_mask(pair)))


def min_feasible_radius(instance: MetricInstance, center: int) -> Fraction | None:
    """Smallest radius whose ball is an allowed client set at ``center``.

    Returns ``None`` when no ball around ``center`` is allowed.
    """
    if instance.lower_bounds is None:
        raise ValueError("instance has no lower-bound spec")
    if not 0 <= center < instance.n:
        raise ValueError(f"invalid point id {center}")
    return instance.center_floor[center]


def candidate_pairs(instance: MetricInstance, radius_cap: Fraction | None = None) -> tuple[Pair, ...]:
    """The candidate universe ``B`` in its fixed total order.

    Pairs are ``(i, d(i, j))`` for every point ``i`` and active ``j`` with the
    radius at most the cap and, under lower bounds, at least ``d_i``.
    """
    cap = instance.cap if radius_cap is None else to_fraction(radius_cap)
    if cap < 0:
        raise ValueError("radius cap must be nonnegative")
    floors = instance.center_floor
    pairs = []
    for i in range(instance.n):
        lo = floors[i]
        if lo is None:
            continue
        radii = set()
        for j in instance.active_points:
            v = instance.distances[i][j]
            if v != UNREACHABLE and lo <= v <= cap:
                radii.add(v)
        pairs.extend(Pair(r, i) for r in radii)
    pairs.sort()
    return tuple(pairs)


def residual_instance(instance: MetricInstance, guessed: Sequence[Pair]) -> MetricInstance:
    """The instance left after committing to ``guessed``."""
    covered = 0
    for p in guessed:
        covered |= instance.pair_mask(p)
    active = frozenset(j for j in instance.active_points if not covered >> j & 1)
    cap = min((p.radius for p in guessed), default=instance.cap)
    return replace(instance, active=active, k=instance.k - len(guessed), radius_cap=cap)


def guess_prefixes(instance: MetricInstance, g: int) -> Iterator[tuple[tuple[Pair, ...], MetricInstance]]:
    """Enumerate guesses of ``g`` distinct pairs with their residual instances.

    Multisets with a repeated pair are skipped, so exactly ``C(|B|, g)``
    guesses are produced.  With ``g = 0`` the single residual equals the input
    with its radius cap made explicit.
    """
    if g < 0:
        raise ValueError("guess depth must be nonnegative")
    if g > instance.k:
        raise ValueError(f"guess depth {g} exceeds k = {instance.k}")
    if g == 0:
        yield (), replace(instance, radius_cap=instance.cap)
        return
    pairs = candidate_pairs(instance)
    for combo in itertools.combinations(pairs, g):
        yield combo, residual_instance(instance, combo)


def verify_metric(instance: MetricInstance) -> list[str]:
    """List every violated metric axiom; an empty list means a valid metric."""
    dist = instance.distances
    n = instance.n
    problems = []
    for i in range(n):
        if dist[i][i] != 0:
            problems.append(f"d({i},{i}) = {dist[i][i]} is not zero")
        for j in range(i + 1, n):
            if dist[i][j] != dist[j][i]:
                problems.append(f"asymmetric: d({i},{j}) = {dist[i][j]} but d({j},{i}) = {dist[j][i]}")
    for j in range(n):
        row_j = dist[j]
        for i in range(n):
            dij = dist[i][j]
            if dij == UNREACHABLE:
                continue
            row_i = dist[i]
            for l in range(n):
                djl = row_j[l]
                if djl == UNREACHABLE:
                    continue
                if row_i[l] > dij + djl:
                    problems.append(f"triangle: d({i},{l}) > d({i},{j}) + d({j},{l})")
    return problems


# ---------------------------------------------------------------------------
# Euclidean inputs

DEFAULT_DENOMINATOR = 2**32


def rational_sqrt_ceil(value: Fraction, denominator: int = DEFAULT_DENOMINATOR) -> Fraction:
    """``ceil(sqrt(value) * denominator) / denominator``, computed exactly.

    Rounding up keeps the triangle inequality intact: if ``a <= b + c`` then
    ``ceil(a) <= ceil(b) + ceil(c)`` on the scaled grid.
    """
    if value < 0:
        raise ValueError("square root of a negative value")
    scaled = value * denominator * denominator
    floor = scaled.numerator // scaled.denominator
    root = math.isqrt(floor)
    if root * root == scaled:
        return Fraction(root, denominator)
    return Fraction(root + 1, denominator)


def euclidean_distances(points: Sequence[Sequence], denominator: int = DEFAULT_DENOMINATOR):
    """Exact squared distances with a rounded-up rational square root."""
    pts = [tuple(to_fraction(c) for c in p) for p in points]
    if len({len(p) for p in pts}) > 1:
        raise ValueError("points must share one dimension")
    n = len(pts)
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            sq = sum(((a - b) ** 2 for a, b in zip(pts[i], pts[j])), Fraction(0))
            rows[i][j] = rows[j][i] = rational_sqrt_ceil(sq, denominator)
    return tuple(tuple(r) for r in rows), tuple(pts)


def euclidean_instance(
    points: Sequence[Sequence],
    k: int,
    m: int = 0,
    lower_bounds: LowerBoundSpec | None = None,
    denominator: int = DEFAULT_DENOMINATOR,
) -> MetricInstance:
    dist, pts = euclidean_distances(points, denominator)
    return MetricInstance(dist, k=k, m=m, lower_bounds=lower_bounds, coordinates=pts)
