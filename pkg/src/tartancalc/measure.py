"""Mass function, staircase (cumulative mass) functions and dimension
estimation for generalized Cantor sets.

The staircase of a set with similarity dimension alpha is the cumulative
self-similar measure (each child interval carries 1/keep_count of its
parent's mass), evaluated by digit descent in O(depth) per point and
interpolated linearly inside the deepest-level intervals.  Two
normalizations are exposed: 'raw' keeps the plain mass-sum scaling, with
full-interval increment 1/Gamma(1+alpha) on a unit base; 'paper' rescales
by Gamma(1+alpha)**2 so the increment is Gamma(1+alpha), the convention
under which the worked closed forms in this package come out.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._numeric import pairwise_sum
from .cantor import CantorSpec, build_intervals
from .gammafn import gamma


class Normalization(enum.Enum):
    PAPER = "paper"  # unit-base endpoint increment Gamma(1+alpha)
    RAW = "raw"      # unit-base endpoint increment 1/Gamma(1+alpha)


class InconclusiveError(RuntimeError):
    """Dimension search could not find a mass-decay sign change."""


@dataclass(frozen=True)
class Staircase:
    """Cumulative mass S(x) of a Cantor set, signed about an origin.

    S(x) is nondecreasing, constant across the gaps of the depth-n set,
    and linear inside the deepest-level intervals.  For x below the origin
    the value is the negated mass of [x, origin].  Points outside the base
    interval clamp to empty/full mass.
    """

    spec: CantorSpec
    alpha: float | None = None  # staircase order; defaults to the set dimension
    normalization: Normalization = Normalization.PAPER
    origin: float = 0.0

    def __post_init__(self) -> None:
        a = self.order
        if not 0.0 < a <= 1.0:
            raise ValueError(f"staircase order must lie in (0, 1], got {a}")

    @property
    def order(self) -> float:
        return self.spec.dimension if self.alpha is None else self.alpha

    @cached_property
    def scale(self) -> float:
        """Multiplier mapping measure fractions to staircase values."""
        lo, hi = self.spec.base
        raw = (hi - lo) ** self.order / gamma(1.0 + self.order)
        if self.normalization is Normalization.PAPER:
            return gamma(1.0 + self.order) ** 2 * raw
        return raw

    @cached_property
    def _origin_fraction(self) -> float:
        return float(self.cdf(self.origin))

    def cdf(self, x) -> np.ndarray | float:
        """Fraction of the set's mass lying in [base lo, x], in [0, 1]."""
        spec = self.spec
        m, r = spec.keep_count, spec.ratio
        lo, hi = spec.base
        gs = spec.gap_step
        xs = np.asarray(x, dtype=float)
        scalar = xs.ndim == 0

        # relative position t in the current interval, resolved digit by digit;
        # child j spans [j*gs, j*gs + r] of the unit parent, the gap after it
        # (if any) carries the plateau value (j+1)/m of the level mass
        t = np.clip((np.atleast_1d(xs) - lo) / (hi - lo), 0.0, 1.0)
        acc = np.zeros_like(t)
        mass = 1.0
        done = np.zeros(t.shape, dtype=bool)
        for _ in range(spec.depth):
            if m == 1:
                j = np.zeros_like(t)
            else:
                j = np.clip(np.floor(t / gs), 0.0, m - 1.0)
            s = t - j * gs
            in_gap = ~done & (s > r)
            acc = np.where(in_gap, acc + (j + 1.0) * (mass / m), acc)
            done |= in_gap
            acc = np.where(done, acc, acc + j * (mass / m))
            t = np.where(done, t, np.clip(s / r, 0.0, 1.0))
            mass /= m
        out = np.where(done, acc, acc + mass * t)
        # pin the clamps exactly; descent rounding would otherwise drift the
        # endpoint identities by a few hundred ulp at depth ~20
        xs1 = np.atleast_1d(xs)
        out = np.where(xs1 <= lo, 0.0, np.where(xs1 >= hi, 1.0, out))
        return float(out[0]) if scalar else out

    def __call__(self, x) -> np.ndarray | float:
        return self.scale * (self.cdf(x) - self._origin_fraction)

    def quantile(self, q, side: str = "left") -> np.ndarray | float:
        """Support point whose mass fraction is q (the inverse of cdf).

        On a gap plateau the fraction is shared by both gap endpoints;
        `side` picks which one ('left' or 'right').
        """
        spec = self.spec
        m, r = spec.keep_count, spec.ratio
        lo, hi = spec.base
        qs = np.asarray(q, dtype=float)
        scalar = qs.ndim == 0
        t = np.clip(np.atleast_1d(qs), 0.0, 1.0)

        pos = np.full(t.shape, float(lo))
        length = hi - lo
        for _ in range(spec.depth):
            u = t * m
            if side == "left":
                j = np.clip(np.ceil(u) - 1.0, 0.0, m - 1)
            else:
                j = np.minimum(np.floor(u), m - 1)
            pos = pos + j * (spec.gap_step * length)
            t = np.clip(u - j, 0.0, 1.0)
            length *= r
        out = pos + t * length
        return float(out[0]) if scalar else out

    def value_at_fraction(self, q) -> np.ndarray | float:
        """Staircase value at mass fraction q (exact, no descent)."""
        return self.scale * (np.asarray(q, dtype=float) - self._origin_fraction)


def staircase_eval(stair: Staircase, x) -> float:
    return stair(x)


@dataclass(frozen=True)
class Staircase2D:
    """Product staircase S(x, y) = Sx(x) * Sy(y) over a tartan."""

    sx: Staircase
    sy: Staircase

    @property
    def zeta(self) -> float:
        return self.sx.order + self.sy.order

    def __call__(self, x, y) -> np.ndarray | float:
        return self.sx(x) * self.sy(y)


def staircase2d_eval(s2: Staircase2D, x, y) -> float:
    return s2(x, y)


@dataclass(frozen=True)
class Subdivision:
    """Grid of subdivision points, one or two axes, strictly increasing."""

    x_points: np.ndarray
    y_points: np.ndarray | None = None

    def __post_init__(self) -> None:
        for pts, name in ((self.x_points, "x"), (self.y_points, "y")):
            if pts is None:
                continue
            if len(pts) < 2 or np.any(np.diff(pts) <= 0):
                raise ValueError(f"{name}_points must be strictly increasing, >= 2 points")

    @property
    def mesh_norm(self) -> float:
        """Largest cell extent: max dx (1D) or max cell area dx*dy (2D)."""
        dx = float(np.max(np.diff(self.x_points)))
        if self.y_points is None:
            return dx
        return dx * float(np.max(np.diff(self.y_points)))

    @classmethod
    def uniform(cls, a: float, b: float, n_cells: int) -> "Subdivision":
        return cls(x_points=np.linspace(a, b, n_cells + 1))


def mass(spec: CantorSpec, a: float, b: float, alpha: float, depth: int) -> float:
    """Level-`depth` mass sum: sum of (clipped length)**alpha / Gamma(1+alpha).

    Uses the depth-aligned subdivision, which realizes the infimum over
    subdivisions for these self-similar sets (refining any kept interval
    only raises the sum, by subadditivity of t**alpha).
    """
    if a > b:
        raise ValueError(f"mass interval needs a <= b, got [{a}, {b}]")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"order must lie in (0, 1], got {alpha}")
    iset = build_intervals(spec, depth=depth)
    lengths = np.minimum(iset.ends, b) - np.maximum(iset.starts, a)
    lengths = lengths[lengths > 0.0]
    if lengths.size == 0:
        return 0.0
    return pairwise_sum(lengths**alpha) / gamma(1.0 + alpha)


def _mass_slope(spec: CantorSpec, s: float, depths: list[int]) -> float:
    """Fitted slope of log(mass) against depth at trial order s."""
    logs = [math.log(mass(spec, spec.base[0], spec.base[1], s, d)) for d in depths]
    return float(np.polyfit(np.asarray(depths, dtype=float), np.asarray(logs), 1)[0])


def estimate_dimension(
    spec: CantorSpec,
    s_lo: float,
    s_hi: float,
    depths: list[int],
    tol: float = 1e-3,
    slope_tol: float = 1e-8,
) -> float:
    """Bisect on the order s for the mass growth/decay sign change.

    A positive log-mass slope means the mass diverges with depth (s below
    the dimension), a negative slope means it vanishes (s above); the
    crossover is the dimension.  Raises InconclusiveError when the slope
    is indistinguishable from zero across the whole bracket.
    """
    if not s_lo < s_hi:
        raise ValueError(f"need s_lo < s_hi, got [{s_lo}, {s_hi}]")
    if not depths or any(d2 <= d1 for d1, d2 in zip(depths, depths[1:])):
        raise ValueError("depths must be a nonempty increasing list")

    slope_lo = _mass_slope(spec, s_lo, depths)
    slope_hi = _mass_slope(spec, s_hi, depths)
    if abs(slope_lo) <= slope_tol and abs(slope_hi) <= slope_tol:
        raise InconclusiveError(
            f"log-mass slope is ~0 at both s={s_lo} and s={s_hi}; "
            "the bracket carries no growth/decay signal"
        )
    if slope_lo < -slope_tol:
        raise ValueError(f"mass already decays at s_lo={s_lo}; dimension below bracket")
    if slope_hi > slope_tol:
        raise ValueError(f"mass still grows at s_hi={s_hi}; dimension above bracket")

    lo, hi = s_lo, s_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        slope = _mass_slope(spec, mid, depths)
        if abs(slope) <= slope_tol:
            return mid
        if slope > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
