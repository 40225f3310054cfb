"""Backward (nabla) calculus on time scales.

A *time scale* is a nonempty closed subset of the real line.  This module
represents a time scale as an ordered union of disjoint pieces, each of which
is either

* a **lattice piece** -- an arithmetic progression ``anchor + k * spacing``
  clipped to ``[start, stop]`` (either bound may be infinite), or
* a **dense piece** -- a closed real interval ``[start, stop]`` carrying a
  quadrature step used by the numerical operators.

For a point ``t`` of the scale, the backward jump operator is

    rho(t) = sup { s in T : s < t },        rho(min T) = min T,

and the backward graininess is ``nu(t) = t - rho(t)``.  A point with
``nu(t) > 0`` is *left-scattered*; with ``nu(t) = 0`` it is *left-dense*.

The nabla derivative of ``f`` at ``t`` is the exact backward difference
quotient ``(f(t) - f(rho(t))) / nu(t)`` at a left-scattered point and the
ordinary two-sided limit at a left-dense point.  The nabla integral over
``(a, b]`` sums ``nu(t) * f(t)`` over left-scattered points and reduces to the
Riemann integral on dense stretches.

The nabla exponential for a nu-regressive function ``p`` (meaning
``1 - nu(t) p(t) != 0``, and *positively* regressive when that quantity stays
positive) is

    nexp_p(t, s) = exp( integral_s^t  xi_{nu(tau)}( p(tau) ) nabla tau ),

where ``xi_h`` is the nu-cylinder transform ``xi_h(z) = -log(1 - h z) / h``
for ``h > 0`` and ``xi_0(z) = z``.  On a left-scattered point the integrand
contributes exactly ``-log(1 - nu * p)``, so the exponential is computed by
accumulating logarithms (never by multiplying long products), which keeps the
group identities exact to rounding on purely discrete scales.

Numerical conventions
---------------------
* Dense quadrature is the trapezoid rule on panels **anchored at the start of
  each dense piece**.  An integration bound falling strictly inside a panel
  is handled by integrating the anchored piecewise-linear interpolant of the
  integrand over the partial panel (the integrand is only ever sampled at
  panel edges).  The integral is therefore exactly additive across arbitrary
  split points: it is the exact integral of one fixed interpolant.
* Reversed bounds negate: ``integral_a^b = -integral_b^a``.
* Derivatives at left-dense points use a central difference of half-width
  ``dt`` (default ``1e-4``), falling back to a backward difference when the
  point sits at the right end of its piece.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "TimeScaleError",
    "RegressivityError",
    "DerivativeUndefinedError",
    "LatticePiece",
    "DensePiece",
    "TimeScale",
    "cylinder",
    "circle_plus",
    "circle_minus",
]

# Tolerance for deciding whether a floating-point time coincides with a grid
# node / piece boundary.  All membership and snapping questions use it.
POINT_TOL = 1e-9


class TimeScaleError(ValueError):
    """A time-scale operation received a point or window it cannot serve."""


class RegressivityError(TimeScaleError):
    """``1 - nu(t) * p(t) <= 0`` at a left-scattered point.

    Carries the offending time in ``.at_time`` so callers can report where
    the cylinder transform / nabla exponential became undefined.
    """

    def __init__(self, message: str, at_time: float | None = None):
        super().__init__(message)
        self.at_time = at_time


class DerivativeUndefinedError(TimeScaleError):
    """The nabla derivative does not exist at the requested point."""


# --------------------------------------------------------------------------
# pieces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticePiece:
    """Arithmetic progression ``anchor + k * spacing`` clipped to [start, stop].

    ``start``/``stop`` may be ``-inf``/``+inf`` for an unbounded progression.
    Finite bounds are snapped onto the progression at construction.
    """

    start: float
    stop: float
    spacing: float = 1.0
    anchor: float = 0.0

    def __post_init__(self):
        if not self.spacing > 0:
            raise TimeScaleError(f"lattice spacing must be positive, got {self.spacing}")
        if self.start > self.stop:
            raise TimeScaleError("piece start must not exceed stop")
        snapped_start = self.start
        snapped_stop = self.stop
        if math.isfinite(self.start):
            k = math.ceil((self.start - self.anchor) / self.spacing - POINT_TOL)
            snapped_start = self.anchor + k * self.spacing
        if math.isfinite(self.stop):
            k = math.floor((self.stop - self.anchor) / self.spacing + POINT_TOL)
            snapped_stop = self.anchor + k * self.spacing
        if snapped_start > snapped_stop + POINT_TOL:
            raise TimeScaleError("lattice piece contains no node")
        object.__setattr__(self, "start", snapped_start)
        object.__setattr__(self, "stop", snapped_stop)

    def contains(self, t: float) -> bool:
        if t < self.start - POINT_TOL or t > self.stop + POINT_TOL:
            return False
        k = (t - self.anchor) / self.spacing
        return abs(k - round(k)) * self.spacing <= POINT_TOL

    def snap_down(self, t: float) -> float:
        """Largest node <= t (assumes start - tol <= t)."""
        t = min(t, self.stop)
        k = math.floor((t - self.anchor) / self.spacing + POINT_TOL)
        return self.anchor + k * self.spacing

    def nodes(self, lo: float, hi: float) -> np.ndarray:
        """All nodes in [lo, hi] (clipped to the piece)."""
        lo = max(lo, self.start)
        hi = min(hi, self.stop)
        if lo > hi + POINT_TOL:
            return np.empty(0)
        k_lo = math.ceil((lo - self.anchor) / self.spacing - POINT_TOL)
        k_hi = math.floor((hi - self.anchor) / self.spacing + POINT_TOL)
        if k_hi < k_lo:
            return np.empty(0)
        return self.anchor + self.spacing * np.arange(k_lo, k_hi + 1, dtype=float)


@dataclass(frozen=True)
class DensePiece:
    """Closed real interval [start, stop] with a quadrature step.

    The requested step is adjusted so the piece holds a whole number of
    panels; panel edges are anchored at ``start``.
    """

    start: float
    stop: float
    step: float = 0.01

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise TimeScaleError("dense pieces must have finite bounds")
        if not self.stop > self.start:
            raise TimeScaleError("dense piece needs stop > start")
        if not self.step > 0:
            raise TimeScaleError(f"quadrature step must be positive, got {self.step}")
        n_panels = max(1, round((self.stop - self.start) / self.step))
        object.__setattr__(self, "step", (self.stop - self.start) / n_panels)

    def contains(self, t: float) -> bool:
        return self.start - POINT_TOL <= t <= self.stop + POINT_TOL

    def snap_down(self, t: float) -> float:
        return min(t, self.stop)

    def edges(self, lo: float, hi: float) -> np.ndarray:
        """Anchored panel edges within [lo, hi], always including lo and hi.

        ``lo``/``hi`` are clipped to the piece.  Off-edge endpoints are
        inserted so integration windows are honoured exactly.
        """
        lo = max(lo, self.start)
        hi = min(hi, self.stop)
        if lo > hi + POINT_TOL:
            return np.empty(0)
        k_lo = math.ceil((lo - self.start) / self.step - POINT_TOL)
        k_hi = math.floor((hi - self.start) / self.step + POINT_TOL)
        inner = self.start + self.step * np.arange(k_lo, k_hi + 1, dtype=float)
        pts = [lo]
        for e in inner:
            if e > pts[-1] + POINT_TOL:
                pts.append(e)
        if hi > pts[-1] + POINT_TOL:
            pts.append(hi)
        elif len(pts) > 1:
            pts[-1] = min(pts[-1], hi)
        return np.asarray(pts)


Piece = LatticePiece | DensePiece


# --------------------------------------------------------------------------
# the time scale
# --------------------------------------------------------------------------


def _eval_on(f: Callable, xs: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on an array, tolerating scalar-only callables."""
    try:
        out = np.asarray(f(xs), dtype=float)
        if out.shape == xs.shape:
            return out
    except Exception:
        pass
    return np.array([float(f(float(x))) for x in xs])


class TimeScale:
    """An ordered union of lattice and dense pieces; see the module docstring.

    Construct via the classmethods :meth:`integer_lattice`,
    :meth:`real_interval`, :meth:`union_of_intervals`, or pass explicit
    pieces (ascending and disjoint, with positive gaps between them).
    """

    def __init__(self, pieces: Sequence[Piece]):
        if not pieces:
            raise TimeScaleError("a time scale needs at least one piece")
        pieces = tuple(pieces)
        for prev, nxt in zip(pieces, pieces[1:]):
            if not nxt.start > prev.stop + POINT_TOL:
                raise TimeScaleError(
                    "pieces must be ascending and separated by positive gaps"
                )
        self.pieces = pieces
        self._starts = [p.start for p in pieces]

    # -- constructors -------------------------------------------------

    @classmethod
    def integer_lattice(cls, spacing: float = 1.0, anchor: float = 0.0) -> "TimeScale":
        """The unbounded lattice { anchor + k*spacing : k integer }."""
        return cls([LatticePiece(-math.inf, math.inf, spacing, anchor)])

    @classmethod
    def real_interval(cls, start: float, stop: float, step: float = 0.01) -> "TimeScale":
        """The closed interval [start, stop] with quadrature step ``step``."""
        return cls([DensePiece(start, stop, step)])

    @classmethod
    def union_of_intervals(
        cls, intervals: Iterable[tuple[float, float]], step: float = 0.01
    ) -> "TimeScale":
        """A union of disjoint closed real intervals, e.g. [0,1] u [2,3]."""
        return cls([DensePiece(a, b, step) for a, b in intervals])

    # -- membership & jumps -------------------------------------------

    def _index_at_or_before(self, t: float) -> int:
        """Index of the last piece whose start <= t (+tol); -1 if none."""
        return bisect_right(self._starts, t + POINT_TOL) - 1

    def contains(self, t: float) -> bool:
        i = self._index_at_or_before(t)
        return i >= 0 and self.pieces[i].contains(t)

    def min_point(self) -> float:
        """The minimum of the scale (may be -inf for unbounded lattices)."""
        return self.pieces[0].start

    def max_point(self) -> float:
        return self.pieces[-1].stop

    def _require_member(self, t: float, what: str = "point") -> None:
        if not self.contains(t):
            raise TimeScaleError(f"{what} {t!r} is not a point of the time scale")

    def backward_jump(self, t: float) -> float:
        """rho(t): the closest scale point strictly below t (rho(min) = min)."""
        self._require_member(t)
        i = self._index_at_or_before(t)
        piece = self.pieces[i]
        if isinstance(piece, DensePiece):
            if t > piece.start + POINT_TOL:
                return t
        else:
            node = piece.snap_down(t)
            if node - piece.spacing >= piece.start - POINT_TOL:
                return node - piece.spacing
        # t sits at the start of its piece: jump across the gap (or stay put
        # at the global minimum).
        if i > 0:
            return self.pieces[i - 1].stop
        return piece.start

    def graininess(self, t: float) -> float:
        """nu(t) = t - rho(t); zero exactly at left-dense points."""
        nu = t - self.backward_jump(t)
        return 0.0 if nu <= POINT_TOL else nu

    def snap_down(self, t: float) -> float:
        """The largest scale point <= t (tolerance ``POINT_TOL``).

        Raises :class:`TimeScaleError` if t lies below the scale minimum.
        """
        i = self._index_at_or_before(t)
        if i < 0:
            raise TimeScaleError(
                f"time {t!r} lies below the minimum of the time scale"
            )
        return self.pieces[i].snap_down(t)

    # -- grids ----------------------------------------------------------

    def grid(self, a: float, b: float) -> np.ndarray:
        """All computation nodes of the scale in [a, b], ascending.

        Contains every scale point in the window on lattice pieces, every
        anchored panel edge on dense pieces, and the window endpoints
        themselves whenever they belong to the scale.
        """
        if b < a:
            raise TimeScaleError("grid window requires a <= b")
        chunks: list[np.ndarray] = []
        for piece in self.pieces:
            if piece.stop < a - POINT_TOL or piece.start > b + POINT_TOL:
                continue
            if isinstance(piece, LatticePiece):
                chunks.append(piece.nodes(a, b))
            else:
                chunks.append(piece.edges(a, b))
        if not chunks:
            return np.empty(0)
        return np.concatenate(chunks)

    def grid_with_graininess(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Grid over [a, b] plus nu(t) for every grid point (vectorised).

        For dense-piece nodes nu = 0; for lattice nodes nu = spacing; the
        first node of every piece after the first carries the gap width.
        The very first returned node gets its true graininess via
        :meth:`backward_jump` when it lies inside the window's piece.
        """
        if b < a:
            raise TimeScaleError("grid window requires a <= b")
        gs: list[np.ndarray] = []
        nus: list[np.ndarray] = []
        prev_stop: float | None = None
        for piece in self.pieces:
            if piece.stop < a - POINT_TOL or piece.start > b + POINT_TOL:
                if piece.stop < a - POINT_TOL:
                    prev_stop = piece.stop
                continue
            if isinstance(piece, LatticePiece):
                g = piece.nodes(a, b)
                nu = np.full(g.shape, piece.spacing)
            else:
                g = piece.edges(a, b)
                nu = np.zeros(g.shape)
            if g.size:
                if abs(g[0] - piece.start) <= POINT_TOL and prev_stop is not None:
                    nu[0] = piece.start - prev_stop
                elif isinstance(piece, LatticePiece) and not math.isfinite(piece.start):
                    pass  # spacing already correct
                elif abs(g[0] - piece.start) <= POINT_TOL and prev_stop is None:
                    nu[0] = 0.0  # global minimum: rho(min) = min
                gs.append(g)
                nus.append(nu)
            prev_stop = piece.stop
        if not gs:
            return np.empty(0), np.empty(0)
        return np.concatenate(gs), np.concatenate(nus)

    def graininess_sup(self, a: float, b: float) -> float:
        """sup of nu over scale points in (a, b] (0 on purely dense windows)."""
        _, nu = self.grid_with_graininess(a, b)
        if nu.size <= 1:
            return float(nu.max()) if nu.size else 0.0
        return float(nu[1:].max())

    # -- derivative ------------------------------------------------------

    def nabla_derivative(self, f: Callable[[float], float], t: float, dt: float = 1e-4) -> float:
        """The nabla derivative of ``f`` at ``t``.

        Exact backward difference quotient at left-scattered points; central
        difference of half-width ``dt`` at left-dense points (backward
        difference at a piece's right endpoint).  Undefined at the scale
        minimum when that minimum is left-dense.
        """
        self._require_member(t)
        rho = self.backward_jump(t)
        nu = t - rho
        if nu > POINT_TOL:
            return (float(f(t)) - float(f(rho))) / nu
        i = self._index_at_or_before(t)
        piece = self.pieces[i]
        if not isinstance(piece, DensePiece):  # pragma: no cover - defensive
            raise DerivativeUndefinedError(f"point {t!r} is isolated")
        room_left = t - piece.start
        if room_left <= POINT_TOL:
            raise DerivativeUndefinedError(
                f"nabla derivative undefined at the left-dense minimum {t!r}"
            )
        room_right = piece.stop - t
        h = min(dt, room_left)
        if room_right > h - POINT_TOL and room_right > POINT_TOL:
            h = min(h, room_right)
            return (float(f(t + h)) - float(f(t - h))) / (2.0 * h)
        return (float(f(t)) - float(f(t - h))) / h

    # -- integral ---------------------------------------------------------

    def _panel_walk(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Grid over [a, b] plus per-panel width and a dense/scattered mask.

        Panel k spans (g[k-1], g[k]]; ``dense[k]`` is True when that panel is
        part of a dense stretch (trapezoid), False when g[k] is a
        left-scattered point receiving the whole panel as jump mass.
        """
        g, nu = self.grid_with_graininess(a, b)
        if g.size < 2:
            return g, np.empty(0), np.empty(0, dtype=bool)
        widths = np.diff(g)
        dense = nu[1:] <= 0.5 * widths
        return g, widths, dense

    def _interpolated_value(self, piece: DensePiece, x: float, f: Callable) -> float:
        """Anchored piecewise-linear interpolant of ``f`` evaluated at ``x``."""
        k = math.floor((x - piece.start) / piece.step + POINT_TOL)
        e0 = piece.start + k * piece.step
        if abs(x - e0) <= POINT_TOL:
            return float(f(e0))
        e1 = min(e0 + piece.step, piece.stop)
        f0, f1 = float(f(e0)), float(f(e1))
        return f0 + (f1 - f0) * (x - e0) / (e1 - e0)

    def _sampled_values(self, f: Callable, g: np.ndarray) -> np.ndarray:
        """f on the grid, with off-edge window endpoints interpolated.

        Interior grid nodes are always anchored panel edges or lattice nodes;
        only the first/last node of a requested window can fall strictly
        inside a dense panel.  Those get the interpolant's value so that
        integrals are exactly additive (module docstring).
        """
        vals = _eval_on(f, g)
        if g.size == 0:
            return vals
        for idx in {0, g.size - 1}:
            x = float(g[idx])
            i = self._index_at_or_before(x)
            piece = self.pieces[i]
            if isinstance(piece, DensePiece):
                k = (x - piece.start) / piece.step
                if abs(k - round(k)) * piece.step > POINT_TOL:
                    vals[idx] = self._interpolated_value(piece, x, f)
        return vals

    def nabla_integral(self, f: Callable[[float], float], a: float, b: float) -> float:
        """The nabla integral of ``f`` over (a, b], signed in the bounds.

        ``a`` and ``b`` must belong to the scale.  Left-scattered points
        contribute ``nu * f(point)``; dense stretches use anchored-panel
        trapezoid quadrature (see the module docstring).
        """
        if b < a:
            return -self.nabla_integral(f, b, a)
        self._require_member(a, "lower bound")
        self._require_member(b, "upper bound")
        if b - a <= POINT_TOL:
            return 0.0
        g, widths, dense = self._panel_walk(a, b)
        vals = self._sampled_values(f, g)
        trap = 0.5 * widths * (vals[:-1] + vals[1:])
        jump = widths * vals[1:]
        return float(np.sum(np.where(dense, trap, jump)))

    # -- exponential --------------------------------------------------------

    def _log_increments(
        self, p: Callable[[float], float], a: float, b: float
    ) -> tuple[np.ndarray, np.ndarray]:
        """Grid over [a, b] and per-panel log-increments of the nabla exponential.

        Dense panels contribute the trapezoid of ``p``; a left-scattered point
        with graininess ``w`` contributes ``-log(1 - w * p)`` exactly.  Raises
        :class:`RegressivityError` when ``1 - w * p <= 0`` anywhere.

        A dense panel that opens at a left-scattered point samples its left
        edge just inside the panel: rates composed with the graininess (such
        as graininess-circle negations) are discontinuous across an atom, and
        the atom's own value belongs to its jump factor alone -- the dense
        stretch right of it must integrate the dense-side values.
        """
        g, widths, dense = self._panel_walk(a, b)
        if g.size < 2:
            return g, np.empty(0)
        vals = self._sampled_values(p, g)
        one_minus = 1.0 - widths * vals[1:]
        bad = (~dense) & (one_minus <= 0.0)
        if np.any(bad):
            where = float(g[1:][bad][0])
            raise RegressivityError(
                f"1 - nu*p <= 0 at left-scattered point t={where!r}; "
                "p is not positively nu-regressive there",
                at_time=where,
            )
        left = vals[:-1]
        opens_at_atom = np.zeros(len(widths), dtype=bool)
        opens_at_atom[1:] = dense[1:] & ~dense[:-1]
        if dense.size and dense[0] and self.graininess(float(g[0])) > 0.0:
            opens_at_atom[0] = True
        if np.any(opens_at_atom):
            left = left.copy()
            for j in np.nonzero(opens_at_atom)[0]:
                nudge = max(1e-8, 1e-3 * float(widths[j]))
                left[j] = float(p(float(g[j]) + nudge))
        trap = 0.5 * widths * (left + vals[1:])
        with np.errstate(divide="ignore", invalid="ignore"):
            jump = -np.log(np.where(dense, 1.0, one_minus))
        return g, np.where(dense, trap, jump)

    def log_nabla_exp(self, p: Callable[[float], float], t: float, s: float) -> float:
        """log of the nabla exponential: signed accumulation from s to t."""
        if t == s:
            return 0.0
        sign = 1.0
        lo, hi = s, t
        if t < s:
            sign, lo, hi = -1.0, t, s
        self._require_member(lo, "exponential bound")
        self._require_member(hi, "exponential bound")
        _, inc = self._log_increments(p, lo, hi)
        return sign * float(np.sum(inc))

    def nabla_exp(self, p: Callable[[float], float], t: float, s: float) -> float:
        """The nabla exponential nexp_p(t, s); see the module docstring.

        Requires ``p`` positively nu-regressive between the bounds.  Works for
        ``t`` on either side of ``s`` (group property: nexp_p(s,t) is the
        reciprocal).
        """
        return math.exp(self.log_nabla_exp(p, t, s))

    def nabla_exp_grid(
        self, p: Callable[[float], float], a: float, b: float, t0: float | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """nexp_p(g, t0) for every grid node g in [a, b] at once.

        Returns ``(grid, values)``.  ``t0`` defaults to ``a`` and must be a
        grid node in the window.  Consistent with :meth:`nabla_exp` because
        both accumulate the same anchored-panel log increments.
        """
        if t0 is None:
            t0 = a
        self._require_member(a, "window start")
        self._require_member(b, "window end")
        g, inc = self._log_increments(p, a, b)
        if g.size == 0:
            return g, g
        logs = np.concatenate([[0.0], np.cumsum(inc)])
        k0 = int(np.argmin(np.abs(g - t0)))
        if abs(g[k0] - t0) > POINT_TOL:
            raise TimeScaleError(f"anchor {t0!r} is not a grid node of the window")
        return g, np.exp(logs - logs[k0])

    # -- regressivity -------------------------------------------------------

    def is_positively_regressive(
        self, p: Callable[[float], float], a: float, b: float
    ) -> bool:
        """True iff 1 - nu(t) p(t) > 0 at every left-scattered t in (a, b]."""
        g, widths, dense = self._panel_walk(a, b)
        if g.size < 2:
            return True
        vals = _eval_on(p, g)
        one_minus = 1.0 - widths * vals[1:]
        return bool(np.all(one_minus[~dense] > 0.0))

    # -- misc ---------------------------------------------------------------

    def describe(self) -> str:
        """One-line human description, used by the command-line tools."""
        parts = []
        for piece in self.pieces:
            if isinstance(piece, LatticePiece):
                lo = "-inf" if not math.isfinite(piece.start) else f"{piece.start:g}"
                hi = "+inf" if not math.isfinite(piece.stop) else f"{piece.stop:g}"
                parts.append(f"lattice[{lo}..{hi}; spacing {piece.spacing:g}]")
            else:
                parts.append(
                    f"interval[{piece.start:g}, {piece.stop:g}; step {piece.step:g}]"
                )
        return " u ".join(parts)

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"TimeScale({self.describe()})"


# --------------------------------------------------------------------------
# pointwise nu-algebra
# --------------------------------------------------------------------------


def cylinder(z: float, nu: float) -> float:
    """The nu-cylinder transform xi_nu(z): z when nu=0, else -log(1-nu z)/nu."""
    if nu == 0.0:
        return float(z)
    w = 1.0 - nu * z
    if w <= 0.0:
        raise RegressivityError(f"cylinder undefined: 1 - nu*z = {w!r} <= 0")
    return -math.log(w) / nu

def circle_plus(p: float, q: float, nu: float) -> float:
    """nu-circle addition: p (+) q = p + q - nu p q."""
    return p + q - nu * p * q


def circle_minus(p: float, nu: float) -> float:
    """nu-circle negation: (-) p = -p / (1 - nu p); inverse of circle_plus."""
    w = 1.0 - nu * p
    if w <= 0.0:
        raise RegressivityError(f"circle_minus undefined: 1 - nu*p = {w!r} <= 0")
    return -p / w
