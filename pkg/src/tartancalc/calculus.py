"""Fractal integration and differentiation against staircase measures.

Integrals are computed as Darboux sums with respect to staircase
increments and always come back as certified lower/upper brackets.
Subdivisions are chosen uniform in *measure* fractions, which for the
two-child families makes every cell boundary a kept-interval endpoint;
integrands are only ever sampled at support points (measure quantiles),
so values off the support can never influence a result.  The per-cell
sup/inf are sampled (cell edges plus `samples_per_cell` interior support
samples), so brackets are certified relative to that sampling rule; for
integrands monotone within cells the sampled extrema are exact.

All reductions are fixed-order pairwise trees: results are bit-identical
run to run and would not depend on worker scheduling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._numeric import pairwise_sum, window_reduce
from .cantor import IntervalSet, TartanSpec
from .measure import Staircase, Staircase2D, Subdivision

_CHUNK_ELEMS = 1 << 23  # ~64 MB of float64 per evaluation block


class SupportSemantics(enum.Enum):
    ON_SUPPORT_ONLY = "on-support-only"
    EVERYWHERE = "everywhere"


class Axis(enum.Enum):
    X = "x"
    Y = "y"


@dataclass(frozen=True)
class Integrand:
    """A two-variable integrand.

    evaluator:      f(x, y) on raw coordinates (numpy-broadcastable).
    staircase_form: optional h(sx, sy) on staircase values; when present the
                    integrators use it directly (no coordinate round trips),
                    which is both faster and exact for integrands that are
                    functions of the staircase only.
    At least one of the two must be given; when both are, they must agree
    on the support.
    """

    evaluator: Callable | None = None
    staircase_form: Callable | None = None
    support_semantics: SupportSemantics = SupportSemantics.EVERYWHERE
    description: str = ""

    def __post_init__(self) -> None:
        if self.evaluator is None and self.staircase_form is None:
            raise ValueError("Integrand needs an evaluator or a staircase_form")


@dataclass(frozen=True)
class OnStaircase:
    """One-axis integrand given as a function of the staircase value."""

    h: Callable
    description: str = ""


@dataclass(frozen=True)
class BracketedValue:
    """A value certified to lie between `lower` and `upper`."""

    lower: float
    upper: float
    midpoint: float
    mesh: float

    @classmethod
    def from_bounds(cls, lower: float, upper: float, mesh: float) -> "BracketedValue":
        return cls(lower=lower, upper=upper, midpoint=0.5 * (lower + upper), mesh=mesh)

    @property
    def width(self) -> float:
        return self.upper - self.lower


class NonConvergenceError(RuntimeError):
    """Refinement ceiling hit before the bracket closed; carries the best one."""

    def __init__(self, message: str, bracket: BracketedValue):
        super().__init__(message)
        self.bracket = bracket


class ResolutionError(RuntimeError):
    """The staircase cannot separate the available neighbor points."""


# ---------------------------------------------------------------------------
# sampling helpers

def _support_points(stair: Staircase, q: np.ndarray) -> np.ndarray:
    """Support coordinates realizing the mass fractions q.

    On a plateau (a gap's shared fraction) the left endpoint is used,
    except for the very first point, where the right endpoint keeps the
    sample inside the integration range.
    """
    x = np.atleast_1d(np.asarray(stair.quantile(q, side="left"), dtype=float))
    x[0] = stair.quantile(float(np.atleast_1d(q)[0]), side="right")
    return x


def _values_1d(f, stair: Staircase, q: np.ndarray) -> np.ndarray:
    if isinstance(f, OnStaircase):
        return np.asarray(f.h(stair.value_at_fraction(q)), dtype=float)
    if isinstance(f, Integrand):
        raise TypeError("one-axis integration takes a callable or OnStaircase")
    return np.asarray(f(_support_points(stair, q)), dtype=float)


def _tree_sum_axis(a: np.ndarray, axis: int) -> np.ndarray:
    """Pairwise tree reduction along one axis of a 2D array."""
    a = np.moveaxis(a, axis, -1)
    while a.shape[-1] > 1:
        if a.shape[-1] % 2:
            a = np.concatenate([a[..., :-2:2] + a[..., 1:-1:2], a[..., -1:]], axis=-1)
        else:
            a = a[..., 0::2] + a[..., 1::2]
    return a[..., 0]


# ---------------------------------------------------------------------------
# Darboux sums on an explicit subdivision

def darboux_sums(
    f,
    stair: Staircase,
    sub: Subdivision,
    samples_per_cell: int = 5,
) -> tuple[float, float]:
    """Lower and upper staircase-weighted sums over an explicit subdivision.

    Per cell, sup/inf are sampled over the cell edges' support
    representatives and `samples_per_cell` interior support samples, all
    chosen as measure quantiles so they fall on the support by
    construction.  Returns (L, U) with L <= U.
    """
    if samples_per_cell < 2:
        raise ValueError(f"samples_per_cell must be >= 2, got {samples_per_cell}")
    pts = np.asarray(sub.x_points, dtype=float)
    q_edges = np.asarray(stair.cdf(pts), dtype=float)
    dS = stair.scale * np.diff(q_edges)

    k = samples_per_cell + 2
    frac = np.linspace(0.0, 1.0, k)
    targets = q_edges[:-1, None] + np.diff(q_edges)[:, None] * frac[None, :]
    vals = _values_1d(f, stair, targets.ravel()).reshape(targets.shape)
    upper = pairwise_sum(vals.max(axis=1) * dS)
    lower = pairwise_sum(vals.min(axis=1) * dS)
    return lower, upper


# ---------------------------------------------------------------------------
# adaptive one-axis integration

def _uniform_bracket_1d(f, stair, q_lo, q_hi, n_cells, spc):
    """Bracket on n_cells uniform-in-measure cells; returns (L, U, mesh)."""
    w = spc + 1
    q = np.linspace(q_lo, q_hi, n_cells * w + 1)
    vals = _values_1d(f, stair, q)
    dS_cell = stair.scale * (q_hi - q_lo) / n_cells
    upper = pairwise_sum(window_reduce(vals, w, "max")) * dS_cell
    lower = pairwise_sum(window_reduce(vals, w, "min")) * dS_cell
    x_edges = _support_points(stair, q[::w])
    mesh = float(np.max(np.diff(x_edges))) if len(x_edges) > 1 else 0.0
    return lower, upper, mesh


def integrate1d(
    f,
    stair: Staircase,
    a: float,
    b: float,
    tol: float,
    samples_per_cell: int = 5,
    max_cells: int = 1 << 17,
) -> BracketedValue:
    """Certified bracket for the staircase integral of f over [a, b].

    Cell counts double (starting from the child count, so boundaries align
    with kept-interval endpoints) until the bracket width drops below tol.
    Raises NonConvergenceError carrying the best bracket if the refinement
    ceiling is reached first.
    """
    if a > b:
        raise ValueError(f"integration range needs a <= b, got [{a}, {b}]")
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    q_lo = float(stair.cdf(a))
    q_hi = float(stair.cdf(b))
    if q_hi <= q_lo:
        return BracketedValue.from_bounds(0.0, 0.0, 0.0)

    n = max(1, stair.spec.keep_count)
    best = None
    while True:
        lower, upper, mesh = _uniform_bracket_1d(f, stair, q_lo, q_hi, n, samples_per_cell)
        best = BracketedValue.from_bounds(lower, upper, mesh)
        if best.width <= tol:
            return best
        if 2 * n > max_cells:
            raise NonConvergenceError(
                f"bracket width {best.width:.3e} > tol {tol:.3e} at {n} cells",
                bracket=best,
            )
        n *= 2


# ---------------------------------------------------------------------------
# iterated two-axis integration

def _as_grid_values(f) -> tuple[Callable, bool]:
    """Normalize a 2D integrand to a broadcastable grid function.

    Returns (fn, wants_raw): fn(ux_or_sx_col, vy_or_sy_row) -> grid values,
    on raw coordinates when wants_raw else on staircase values.
    """
    if isinstance(f, Integrand):
        if f.staircase_form is not None:
            return f.staircase_form, False
        return f.evaluator, True
    return f, True  # plain callable on raw coordinates


def _inner_brackets(fn, wants_raw, sx_vals, x_pts, sy, q_lo, q_hi, n_in, spc):
    """Vectorized inner brackets over all outer sample points.

    Returns (G_lo, G_hi) arrays: for each outer sample, the lower/upper
    bracket of the inner one-axis integral.
    """
    w = spc + 1
    qv = np.linspace(q_lo, q_hi, n_in * w + 1)
    col = x_pts if wants_raw else sx_vals
    row = (_support_points(sy, qv) if wants_raw else np.asarray(sy.value_at_fraction(qv)))
    dS_cell = sy.scale * (q_hi - q_lo) / n_in

    n_u = len(col)
    g_hi = np.empty(n_u)
    g_lo = np.empty(n_u)
    step = max(1, _CHUNK_ELEMS // max(1, len(row)))
    for i in range(0, n_u, step):
        blk = np.asarray(fn(col[i : i + step, None], row[None, :]), dtype=float)
        blk = np.broadcast_to(blk, (len(col[i : i + step]), len(row)))
        hi = window_reduce(blk, w, "max", axis=1)
        lo = window_reduce(blk, w, "min", axis=1)
        g_hi[i : i + step] = _tree_sum_axis(hi, 1) * dS_cell
        g_lo[i : i + step] = _tree_sum_axis(lo, 1) * dS_cell
    return g_lo, g_hi


def integrate2d(
    f,
    tartan: TartanSpec,
    s2: Staircase2D,
    tol: float,
    samples_per_cell: int = 5,
    max_cells_axis: int = 4096,
) -> BracketedValue:
    """Certified bracket for the iterated fractal integral over the tartan's
    rectangle: inner staircase integral in y at each outer x sample, then the
    outer staircase integral in x.

    The tolerance is split between the levels (tol/2 each); inner bracket
    widths propagate conservatively into the outer sums (the outer upper sum
    samples the inner uppers, the lower sum the inner lowers).
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    sx, sy = s2.sx, s2.sy
    a, b, c, d = tartan.rectangle
    qx_lo, qx_hi = float(sx.cdf(a)), float(sx.cdf(b))
    qy_lo, qy_hi = float(sy.cdf(c)), float(sy.cdf(d))
    if qx_hi <= qx_lo or qy_hi <= qy_lo:
        return BracketedValue.from_bounds(0.0, 0.0, 0.0)

    fn, wants_raw = _as_grid_values(f)
    w = samples_per_cell + 1
    n_out = max(1, sx.spec.keep_count)
    n_in = max(1, sy.spec.keep_count)
    best = None
    while True:
        qu = np.linspace(qx_lo, qx_hi, n_out * w + 1)
        sx_vals = np.asarray(sx.value_at_fraction(qu))
        x_pts = _support_points(sx, qu)

        while True:
            g_lo, g_hi = _inner_brackets(
                fn, wants_raw, sx_vals, x_pts, sy, qy_lo, qy_hi, n_in, samples_per_cell
            )
            if float(np.max(g_hi - g_lo)) <= 0.5 * tol or 2 * n_in > max_cells_axis:
                break
            n_in *= 2

        dSx_cell = sx.scale * (qx_hi - qx_lo) / n_out
        upper = pairwise_sum(window_reduce(g_hi, w, "max")) * dSx_cell
        lower = pairwise_sum(window_reduce(g_lo, w, "min")) * dSx_cell
        mesh_x = float(np.max(np.diff(x_pts[::w])))
        qv_edges = np.linspace(qy_lo, qy_hi, n_in + 1)
        mesh_y = float(np.max(np.diff(_support_points(sy, qv_edges))))
        best = BracketedValue.from_bounds(lower, upper, mesh_x * mesh_y)
        if best.width <= tol:
            return best
        if 2 * n_out > max_cells_axis:
            raise NonConvergenceError(
                f"bracket width {best.width:.3e} > tol {tol:.3e} "
                f"at {n_out}x{n_in} cells",
                bracket=best,
            )
        n_out *= 2


# ---------------------------------------------------------------------------
# closed forms, derivative, differential equation

def conjugate_integral(antiderivative: Callable, stair: Staircase, a: float, b: float) -> float:
    """Exact staircase integral of h(S(x)) given an antiderivative H of h.

    Substituting u = S(x) collapses the staircase integral to an ordinary
    one, so the value is H(S(b)) - H(S(a)); exact up to Gamma evaluation.
    Serves as the independent oracle for integrate1d on such integrands.
    """
    return float(antiderivative(stair(b)) - antiderivative(stair(a)))


def _point_value(f, s2: Staircase2D, x: float, y: float) -> float:
    if isinstance(f, Integrand):
        if f.evaluator is not None:
            return float(f.evaluator(x, y))
        return float(f.staircase_form(s2.sx(x), s2.sy(y)))
    return float(f(x, y))


def partial_derivative(
    f,
    s2: Staircase2D,
    axis: Axis,
    point: tuple[float, float],
    iset: IntervalSet,
) -> float:
    """Staircase-quotient partial derivative of f at `point` along `axis`.

    Off the axis support the derivative is 0 by definition.  On it, the
    two-sided difference quotient (f(x') - f(x)) / (S(x') - S(x)) is formed
    with x' the nearest interval endpoints (from `iset`) at which the axis
    staircase actually changes, and the two one-sided quotients are
    averaged (one-sided at the extremes).  Raises ResolutionError when the
    staircase cannot separate any available neighbor.
    """
    x, y = point
    stair = s2.sx if axis is Axis.X else s2.sy
    coord = x if axis is Axis.X else y
    if not iset.contains(coord):
        return 0.0

    s0 = float(stair(coord))
    f0 = _point_value(f, s2, x, y)
    pts = iset.endpoints
    # staircase plateaus make touching endpoints indistinguishable; require
    # at least half a depth-level mass quantum of separation
    quantum = stair.scale * stair.spec.keep_count ** (-stair.spec.depth)
    min_sep = 0.5 * quantum

    def quotient(direction: int) -> float | None:
        i = int(np.searchsorted(pts, coord, side="left" if direction < 0 else "right"))
        i += -1 if direction < 0 else 0
        while 0 <= i < len(pts):
            s1 = float(stair(pts[i]))
            if abs(s1 - s0) > min_sep:
                xp = float(pts[i])
                f1 = _point_value(f, s2, xp, y) if axis is Axis.X else _point_value(f, s2, x, xp)
                return (f1 - f0) / (s1 - s0)
            i += direction
        return None

    sides = [q for q in (quotient(-1), quotient(+1)) if q is not None]
    if not sides:
        raise ResolutionError(
            "staircase is flat across every available neighbor; "
            "increase the construction depth"
        )
    return float(np.mean(sides))


def solve_fode(
    h: Callable,
    stair: Staircase,
    y0: float,
    x_grid,
    tol: float = 1e-6,
    samples_per_cell: int = 5,
    max_cells: int = 1 << 17,
) -> list[tuple[float, float]]:
    """Solve D y(x) = h(S(x)), y(origin) = y0, on the given grid.

    The solution is the cumulative staircase integral
    y(x) = y0 + integral of h(S) from the origin to x, evaluated on one
    shared subdivision refined until the full-range bracket width is below
    tol.  y is constant across support gaps.
    """
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or len(xs) == 0:
        raise ValueError("x_grid must be a nonempty 1D sequence")
    if np.any(np.diff(xs) < 0):
        raise ValueError("x_grid must be sorted ascending")
    lo, hi = stair.spec.base
    if xs[0] < lo or xs[-1] > hi:
        raise ValueError(f"x_grid must lie within the base interval [{lo}, {hi}]")
    if xs[0] < stair.origin:
        raise ValueError("x_grid must not extend below the staircase origin")

    q0 = float(stair.cdf(stair.origin))
    q_pts = np.asarray(stair.cdf(xs), dtype=float)
    q_hi = max(float(q_pts[-1]), q0)
    if q_hi <= q0:
        return [(float(x), y0) for x in xs]

    w = samples_per_cell + 1
    n = max(1, stair.spec.keep_count)
    while True:
        q = np.linspace(q0, q_hi, n * w + 1)
        vals = np.asarray(h(stair.value_at_fraction(q)), dtype=float)
        vals = np.broadcast_to(vals, q.shape)
        cell_hi = window_reduce(vals, w, "max")
        cell_lo = window_reduce(vals, w, "min")
        dS = stair.scale * (q_hi - q0) / n
        total_width = (pairwise_sum(cell_hi) - pairwise_sum(cell_lo)) * dS
        if total_width <= tol or 2 * n > max_cells:
            if total_width > tol:
                raise NonConvergenceError(
                    f"cumulative bracket width {total_width:.3e} > tol {tol:.3e}",
                    bracket=BracketedValue.from_bounds(0.0, total_width, 0.0),
                )
            break
        n *= 2

    cum_hi = np.concatenate([[0.0], np.cumsum(cell_hi) * dS])
    cum_lo = np.concatenate([[0.0], np.cumsum(cell_lo) * dS])
    edges = np.linspace(q0, q_hi, n + 1)
    cell_w = (q_hi - q0) / n
    idx = np.clip(((q_pts - q0) / cell_w).astype(int), 0, n - 1)
    part = stair.scale * (q_pts - edges[idx])
    y_hi = cum_hi[idx] + cell_hi[idx] * part
    y_lo = cum_lo[idx] + cell_lo[idx] * part
    ys = y0 + 0.5 * (y_hi + y_lo)
    return [(float(x), float(yv)) for x, yv in zip(xs, ys)]
