"""Generalized Cantor sets, their finite-depth interval approximations,
and the two-axis tartan built from them.

A set is described generatively (`CantorSpec`): every interval is replaced
by `keep_count` copies scaled by `ratio`, anchored at both ends of the
parent with equal gaps in between.  `build_intervals` expands the
description to the requested depth; `IntervalSet` is the flat, sorted
carrier used for membership tests, flags and neighbor queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

# Hard cap on materialized intervals (keep_count ** depth); 2**24 intervals
# is ~270 MB of endpoint data, past that the digit-descent staircase is the
# right tool, not an explicit interval list.
MAX_INTERVALS = 1 << 24


class ConstructionError(ValueError):
    """Raised for generative descriptions that cannot produce a valid set."""


@dataclass(frozen=True)
class CantorSpec:
    """Generative description of a self-similar Cantor set.

    keep_count: number of child copies kept per interval (m >= 1)
    ratio:      child/parent length ratio, in (0, 1]
    depth:      construction depth (n >= 0)
    base:       the starting closed interval (lo, hi)

    Children are end-anchored: the first child starts at the parent's left
    end, the last ends at its right end, gaps are equal.  keep_count*ratio
    must not exceed 1 so the children fit disjointly; when it equals 1 the
    children tile the parent and the set degenerates to the full interval.
    """

    keep_count: int
    ratio: float
    depth: int
    base: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        m, r = self.keep_count, self.ratio
        lo, hi = self.base
        if m < 1 or m != int(m):
            raise ConstructionError(f"keep_count must be a positive integer, got {m}")
        if not 0.0 < r <= 1.0:
            raise ConstructionError(f"ratio must lie in (0, 1], got {r}")
        if m * r > 1.0 + 1e-12:
            raise ConstructionError(
                f"keep_count * ratio = {m * r:g} > 1: children cannot fit disjointly"
            )
        if self.depth < 0:
            raise ConstructionError(f"depth must be >= 0, got {self.depth}")
        if not lo < hi:
            raise ConstructionError(f"base interval needs lo < hi, got {self.base}")

    @classmethod
    def from_dimension(
        cls, alpha: float, depth: int, base: tuple[float, float] = (0.0, 1.0)
    ) -> "CantorSpec":
        """Two-child set with similarity dimension `alpha` in (0, 1].

        Uses ratio 2**(-1/alpha), the simplest symmetric end-anchored family
        covering every dimension; alpha = 1 gives ratio 1/2, i.e. the full
        interval, and alpha = ln2/ln3 recovers the middle-thirds set.
        """
        if not 0.0 < alpha <= 1.0:
            raise ConstructionError(f"dimension must lie in (0, 1], got {alpha}")
        return cls(keep_count=2, ratio=2.0 ** (-1.0 / alpha), depth=depth, base=base)

    @property
    def dimension(self) -> float:
        """Similarity dimension ln(m)/ln(1/r); 1.0 when the children tile."""
        m, r = self.keep_count, self.ratio
        if abs(m * r - 1.0) <= 1e-12:
            return 1.0
        if m == 1:
            return 0.0
        return math.log(m) / math.log(1.0 / r)

    @property
    def gap_step(self) -> float:
        """Child start spacing as a fraction of the parent length."""
        m, r = self.keep_count, self.ratio
        return (1.0 - r) / (m - 1) if m > 1 else 0.0

    def with_depth(self, depth: int) -> "CantorSpec":
        return replace(self, depth=depth)


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, non-overlapping closed intervals (depth-n image of a spec).

    Intervals are pairwise disjoint except that adjacent ones may share an
    endpoint when keep_count*ratio = 1 (the children tile the parent); the
    count invariant keep_count**depth is preserved in that case rather than
    merging.
    """

    starts: np.ndarray
    ends: np.ndarray

    def __post_init__(self) -> None:
        self.starts.setflags(write=False)
        self.ends.setflags(write=False)

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.ends - self.starts))

    @cached_property
    def endpoints(self) -> np.ndarray:
        """All interval endpoints, ascending (possibly with touching pairs)."""
        pts = np.empty(2 * len(self.starts))
        pts[0::2] = self.starts
        pts[1::2] = self.ends
        pts.setflags(write=False)
        return pts

    def contains(self, x: float | np.ndarray) -> bool | np.ndarray:
        """Closed-interval membership; endpoints are members."""
        idx = np.searchsorted(self.starts, x, side="right") - 1
        idx_c = np.clip(idx, 0, len(self.starts) - 1)
        inside = (idx >= 0) & (np.asarray(x) <= self.ends[idx_c])
        if np.isscalar(x) or np.ndim(x) == 0:
            return bool(inside)
        return inside

    def flag(self, p: float, q: float) -> int:
        """1 if the closed interval [p, q] meets the set, else 0."""
        if p > q:
            raise ValueError(f"flag interval needs p <= q, got [{p}, {q}]")
        # first interval whose end reaches p; it intersects iff it starts by q
        i = int(np.searchsorted(self.ends, p, side="left"))
        return int(i < len(self.starts) and self.starts[i] <= q)

    def neighbors(self, x: float) -> tuple[float | None, float | None]:
        """Nearest interval endpoints strictly below and above x.

        x must be a member; at the global extremes the missing side is None.
        """
        if not self.contains(x):
            raise ValueError(f"x = {x} is not on the support")
        pts = self.endpoints
        lo = int(np.searchsorted(pts, x, side="left"))
        hi = int(np.searchsorted(pts, x, side="right"))
        pred = float(pts[lo - 1]) if lo > 0 else None
        succ = float(pts[hi]) if hi < len(pts) else None
        return pred, succ


def build_intervals(spec: CantorSpec, depth: int | None = None) -> IntervalSet:
    """Expand the spec to its depth-n interval approximation.

    Produces exactly keep_count**n intervals of length (hi-lo)*ratio**n,
    in ascending order.  `depth` overrides the spec's own depth if given.
    """
    n = spec.depth if depth is None else depth
    if n < 0:
        raise ConstructionError(f"depth must be >= 0, got {n}")
    m, r = spec.keep_count, spec.ratio
    lo, hi = spec.base
    if m**n > MAX_INTERVALS:
        raise ConstructionError(
            f"{m}**{n} intervals exceeds the materialization cap ({MAX_INTERVALS})"
        )
    starts = np.array([lo])
    length = hi - lo
    for _ in range(n):
        offsets = np.arange(m) * (spec.gap_step * length)
        starts = (starts[:, None] + offsets[None, :]).ravel()
        length *= r
    return IntervalSet(starts=starts, ends=starts + length)


# Spec-level aliases: the flag/contains operations read better as methods,
# but the free-function spellings are part of the public surface too.
def contains(iset: IntervalSet, x: float) -> bool:
    return bool(iset.contains(x))


def flag(iset: IntervalSet, p: float, q: float) -> int:
    return iset.flag(p, q)


def neighbors_on_support(iset: IntervalSet, x: float) -> tuple[float | None, float | None]:
    return iset.neighbors(x)


@dataclass(frozen=True)
class TartanSpec:
    """Two-axis tartan: (C_x x [c,d]) union ([a,b] x C_y) inside a rectangle.

    The rectangle defaults to the product of the two base intervals.
    """

    x_spec: CantorSpec
    y_spec: CantorSpec
    region: tuple[float, float, float, float] | None = None

    @property
    def rectangle(self) -> tuple[float, float, float, float]:
        if self.region is not None:
            return self.region
        (a, b), (c, d) = self.x_spec.base, self.y_spec.base
        return (a, b, c, d)

    def member(self, x, y, x_set: IntervalSet, y_set: IntervalSet):
        """Vectorized membership in the union set, clipped to the rectangle."""
        a, b, c, d = self.rectangle
        in_rect = (np.asarray(x) >= a) & (np.asarray(x) <= b) & (np.asarray(y) >= c) & (np.asarray(y) <= d)
        return in_rect & (x_set.contains(x) | y_set.contains(y))
