"""Exact affine functions of one variable and their lower envelopes."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .metric import to_fraction


@dataclass(frozen=True)
class Affine:
    """``x -> slope * x + intercept``."""

    slope: Fraction
    intercept: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "slope", to_fraction(self.slope))
        object.__setattr__(self, "intercept", to_fraction(self.intercept))

    def __call__(self, x: Fraction) -> Fraction:
        return self.slope * x + self.intercept

    def __add__(self, other: Affine) -> Affine:
        return Affine(self.slope + other.slope, self.intercept + other.intercept)

    def __sub__(self, other: Affine) -> Affine:
        return Affine(self.slope - other.slope, self.intercept - other.intercept)

    def scale(self, factor) -> Affine:
        return Affine(self.slope * factor, self.intercept * factor)

    def crossing(self, other: Affine) -> Fraction | None:
        """Where the two lines meet, or ``None`` for parallel lines."""
        ds = self.slope - other.slope
        if ds == 0:
            return None
        return (other.intercept - self.intercept) / ds


@dataclass(frozen=True)
class PiecewiseAffine:
    """A continuous function made of affine pieces on a closed interval.

    ``breakpoints`` has one more entry than ``pieces``; piece ``t`` is used on
    ``[breakpoints[t], breakpoints[t + 1]]``.  ``labels`` optionally records
    which input line realises each piece.
    """

    breakpoints: tuple[Fraction, ...]
    pieces: tuple[Affine, ...]
    labels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.breakpoints) != len(self.pieces) + 1 or not self.pieces:
            raise ValueError("need one more breakpoint than pieces")
        for a, b in zip(self.breakpoints, self.breakpoints[1:]):
            if not a <= b:
                raise ValueError("breakpoints must be nondecreasing")
        for t in range(1, len(self.pieces)):
            x = self.breakpoints[t]
            if self.pieces[t - 1](x) != self.pieces[t](x):
                raise ValueError(f"discontinuity at {x}")

    @property
    def domain(self) -> tuple[Fraction, Fraction]:
        return self.breakpoints[0], self.breakpoints[-1]

    def piece_index(self, x: Fraction) -> int:
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise ValueError(f"{x} outside [{lo}, {hi}]")
        t = bisect.bisect_right(self.breakpoints, x) - 1
        return min(max(t, 0), len(self.pieces) - 1)

    def __call__(self, x) -> Fraction:
        x = to_fraction(x)
        return self.pieces[self.piece_index(x)](x)

    def shifted(self, base: Affine) -> PiecewiseAffine:
        """Add an affine function to every piece."""
        return PiecewiseAffine(self.breakpoints, tuple(p + base for p in self.pieces), self.labels)


def lower_envelope(lines: Sequence[Affine], lo, hi) -> PiecewiseAffine:
    """Pointwise minimum of ``lines`` on ``[lo, hi]``.

    Sweeps from left to right.  At every breakpoint the next active line is
    the one with the smallest slope among those attaining the minimum, so
    slopes strictly decrease along the envelope and each line contributes at
    most one piece.
    """
    if not lines:
        raise ValueError("need at least one line")
    lo, hi = to_fraction(lo), to_fraction(hi)
    if lo > hi:
        raise ValueError("empty interval")

    def best_at(x: Fraction, candidates) -> int:
        return min(candidates, key=lambda i: (lines[i](x), lines[i].slope, i))

    cur = best_at(lo, range(len(lines)))
    xs = [lo]
    pieces = [lines[cur]]
    labels = [cur]
    x = lo
    while x < hi:
        line = lines[cur]
        nxt_x = None
        nxt = []
        for i, other in enumerate(lines):
            if other.slope >= line.slope:
                continue
            cx = line.crossing(other)
            if cx is None or cx <= x or cx >= hi:
                continue
            if nxt_x is None or cx < nxt_x:
                nxt_x, nxt = cx, [i]
            elif cx == nxt_x:
                nxt.append(i)
        if nxt_x is None:
            break
        cur = min(nxt, key=lambda i: (lines[i].slope, i))
        x = nxt_x
        xs.append(x)
        pieces.append(lines[cur])
        labels.append(cur)
    xs.append(hi)
    return PiecewiseAffine(tuple(xs), tuple(pieces), tuple(labels))
