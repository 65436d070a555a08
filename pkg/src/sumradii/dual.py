"""Dual solutions, tightness and ball-overlap components."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .metric import MetricInstance, Pair, iter_bits, popcount

ZERO = Fraction(0)


@dataclass(frozen=True)
class DualSolution:
    """Values of ``lambda``, ``alpha`` and (with outliers) ``gamma``.

    ``alpha`` is keyed by the active points; missing keys read as zero.
    """

    lam: Fraction
    alpha: Mapping[int, Fraction] = field(default_factory=dict)
    gamma: Fraction | None = None

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    def a(self, j: int) -> Fraction:
        return self.alpha.get(j, ZERO)

    def alpha_over(self, mask: int) -> Fraction:
        total = ZERO
        for j in iter_bits(mask):
            total += self.alpha.get(j, ZERO)
        return total

    @classmethod
    def zero(cls, instance: MetricInstance, outliers: bool = False) -> DualSolution:
        return cls(ZERO, {j: ZERO for j in instance.active_points}, ZERO if outliers else None)


def slack(instance: MetricInstance, dual: DualSolution, pair: Pair) -> Fraction:
    """``r + lambda`` minus the alpha mass inside the ball."""
    covered = instance.pair_mask(pair) & instance.active_mask
    return pair.radius + dual.lam - dual.alpha_over(covered)


def is_tight(instance: MetricInstance, dual: DualSolution, pair: Pair) -> bool:
    return slack(instance, dual, pair) == 0


def is_almost_tight(instance: MetricInstance, dual: DualSolution, pair: Pair, mu: Fraction) -> bool:
    """Slack at most ``mu`` (closed boundary)."""
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return slack(instance, dual, pair) <= mu


def infeasible_pairs(instance: MetricInstance, dual: DualSolution, pairs: Iterable[Pair]) -> list[Pair]:
    """Pairs whose dual constraint is violated (negative slack)."""
    return [p for p in pairs if slack(instance, dual, p) < 0]


def _component_masks(masks: Sequence[int]) -> list[int]:
    """Group indices into components; returns a label per index."""
    labels = list(range(len(masks)))

    def find(x: int) -> int:
        while labels[x] != x:
            labels[x] = labels[labels[x]]
            x = labels[x]
        return x

    # point -> first pair index seen covering it
    owner: dict[int, int] = {}
    for idx, mask in enumerate(masks):
        for j in iter_bits(mask):
            other = owner.get(j)
            if other is None:
                owner[j] = idx
            else:
                a, b = find(idx), find(other)
                if a != b:
                    labels[max(a, b)] = min(a, b)
    return [find(i) for i in range(len(masks))]


def components(instance: MetricInstance, pairs: Iterable[Pair]) -> list[tuple[Pair, ...]]:
    """Connected components of ``pairs`` under ball overlap.

    Members of a component are listed in the total pair order and the
    components are ordered by their smallest member.
    """
    ordered = sorted(set(pairs))
    labels = _component_masks([instance.pair_mask(p) for p in ordered])
    groups: dict[int, list[Pair]] = {}
    for p, lab in zip(ordered, labels):
        groups.setdefault(lab, []).append(p)
    return [tuple(groups[lab]) for lab in sorted(groups)]


def count_components(instance: MetricInstance, pairs: Iterable[Pair]) -> int:
    merged: list[int] = []
    for p in set(pairs):
        mask = instance.pair_mask(p)
        keep = []
        for other in merged:
            if other & mask:
                mask |= other
            else:
                keep.append(other)
        keep.append(mask)
        merged = keep
    return len(merged)


def covered_mask(instance: MetricInstance, pairs: Iterable[Pair]) -> int:
    acc = 0
    for p in pairs:
        acc |= instance.pair_mask(p)
    return acc


def component_points(instance: MetricInstance, component: Iterable[Pair]) -> int:
    """``X(C)``: every point of ``X`` inside some ball of the component."""
    return covered_mask(instance, component)


def uncovered_mask(instance: MetricInstance, pairs: Iterable[Pair]) -> int:
    return instance.active_mask & ~covered_mask(instance, pairs)


def uncovered(instance: MetricInstance, pairs: Iterable[Pair]) -> frozenset[int]:
    """Active points outside every ball of ``pairs``."""
    return frozenset(iter_bits(uncovered_mask(instance, pairs)))


def count_uncovered(instance: MetricInstance, pairs: Iterable[Pair]) -> int:
    return popcount(uncovered_mask(instance, pairs))


def dual_objective(dual: DualSolution, k_prime: int, m: int | None = None) -> Fraction:
    """``sum(alpha) - k' lambda``, minus ``m gamma`` when ``m`` is given."""
    total = sum(dual.alpha.values(), ZERO) - k_prime * dual.lam
    if m is None:
        return total
    if dual.gamma is None:
        raise ValueError("outlier objective needs gamma")
    return total - m * dual.gamma


def sum_of_radii(pairs: Iterable[Pair]) -> Fraction:
    return sum((p.radius for p in pairs), ZERO)
