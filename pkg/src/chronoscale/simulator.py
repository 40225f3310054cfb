"""Nabla-consistent time stepping for the delayed two-layer network.

Scheme
------
The stepper walks the scale grid point by point.  Over a *scattered* panel
(backward gap ``nu > 0``) the nabla dynamics give the implicit update

    y(t) = y(rho(t)) + nu * RHS(t, y(t), history),

solved by fixed-point iteration: start from the carried-forward previous
state and re-substitute ``corrector_iters`` times, failing loudly if the
iteration stops contracting or produces non-finite values.  Over a *dense*
panel (width ``h``) the update is a trapezoidal predictor/corrector step

    predictor   y_p = y_prev + h * RHS_prev
    corrector   y   = y_prev + (h/2) * (RHS_prev + RHS(t, y_p)),

which is second-order accurate on smooth stretches.

Derivative traces: on scattered panels the committed nabla derivative is the
exact backward quotient ``(y(t) - y(rho(t))) / nu``; on dense panels it is
the right-hand side evaluated at the committed state.  Either way the traces
satisfy the model equations to scheme order, which the test suite checks
post hoc against the reference right-hand-side evaluator.

Lookup semantics: a delayed argument that falls strictly between scale
points resolves by *snapping down* to the nearest scale point at or below it
on scattered stretches, and by linear interpolation between committed grid
values on dense stretches.  Distributed integrals are maintained
incrementally with prefix sums over committed panels plus a live-panel term:
activation-of-state integrands use the trapezoid of their grid samples on
dense panels (matching the time scale's own quadrature convention), while
activation-of-derivative integrands use the piecewise-constant panel-slope
convention natural to nabla calculus.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, IO

import numpy as np

from .network import NetworkSpec, StateAccessor
from .timescale import POINT_TOL, TimeScale

__all__ = [
    "SimulationError",
    "StepFailureError",
    "HistoryUnderflowError",
    "HistorySpec",
    "Trajectory",
    "simulate",
    "history_norm",
    "distance_series",
    "trajectory_norm_distance",
]


class SimulationError(RuntimeError):
    """Base class for stepper failures."""


class StepFailureError(SimulationError):
    """A step could not be completed (divergent iteration, overflow...)."""

    def __init__(self, t: float, message: str):
        super().__init__(f"step to t={t!r} failed: {message}")
        self.t = t


class HistoryUnderflowError(SimulationError):
    """A delayed lookup reached below the supplied history window."""


ScalarFn = Callable[[float], float]


@dataclass(frozen=True)
class HistorySpec:
    """Initial data on ``[-window, 0]`` relative to the start time.

    ``stm[i]``/``ltm[i]`` give the short/long-term state of neuron ``i`` at a
    relative time ``s <= 0``; the ``*_slope`` entries give the corresponding
    nabla derivatives.  Entries may be plain callables or coefficient
    expressions.
    """

    stm: tuple[ScalarFn, ...]
    stm_slope: tuple[ScalarFn, ...]
    ltm: tuple[ScalarFn, ...]
    ltm_slope: tuple[ScalarFn, ...]
    window: float

    def __post_init__(self):
        n = len(self.stm)
        for name in ("stm_slope", "ltm", "ltm_slope"):
            if len(getattr(self, name)) != n:
                raise ValueError("history component tuples must share one length")
        if not self.window >= 0.0:
            raise ValueError("history window must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.stm)


@dataclass
class Trajectory:
    """A committed simulation run with derivative traces.

    ``times`` spans the filled history segment plus the live segment;
    ``start_index`` marks the start time within ``times``.  State arrays are
    shaped ``(n, len(times))``.  ``dx``/``ds`` hold the nabla-derivative
    traces (declared slopes over the history segment, scheme derivatives
    afterwards).
    """

    ts: TimeScale
    times: np.ndarray
    start_index: int
    x: np.ndarray
    s: np.ndarray
    dx: np.ndarray
    ds: np.ndarray
    _panel_dense: np.ndarray
    _slope_x: np.ndarray
    _slope_s: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def t0(self) -> float:
        return float(self.times[self.start_index])

    @property
    def live_times(self) -> np.ndarray:
        return self.times[self.start_index:]

    # -- committed-state lookups ----------------------------------------

    def _locate(self, u: float) -> int:
        j = int(np.searchsorted(self.times, u + POINT_TOL)) - 1
        if j < 0:
            raise HistoryUnderflowError(
                f"lookup at t={u!r} reaches below the recorded range "
                f"(starts at {self.times[0]!r}); supply a longer history window"
            )
        if u > self.times[-1] + POINT_TOL:
            raise ValueError(f"lookup at t={u!r} is beyond the trajectory end")
        return j

    def value(self, index: int, u: float) -> float:
        """State ``index`` (0..n-1 short-term, n..2n-1 long-term) at ``u``."""
        arr = self.x if index < self.n else self.s
        row = index % self.n
        j = self._locate(u)
        if u <= self.times[j] + POINT_TOL or j + 1 >= len(self.times):
            return float(arr[row, j])
        if self._panel_dense[j + 1]:
            lam = (u - self.times[j]) / (self.times[j + 1] - self.times[j])
            return float(arr[row, j] + lam * (arr[row, j + 1] - arr[row, j]))
        return float(arr[row, j])  # snap down over a scattered panel

    def slope(self, index: int, u: float) -> float:
        """Backward panel slope of state ``index`` at ``u``.

        This is the nabla-natural derivative of the committed polyline: at a
        grid point, the quotient over the panel ending there (the declared
        history slope at the very first point); between grid points, the
        quotient of the panel containing the query.
        """
        arr = self._slope_x if index < self.n else self._slope_s
        row = index % self.n
        j = self._locate(u)
        if u <= self.times[j] + POINT_TOL or j + 1 >= len(self.times):
            return float(arr[row, j])
        return float(arr[row, j + 1])

    def accessor(self) -> StateAccessor:
        """Adapter for the reference right-hand-side evaluator."""
        return lambda index, u: (self.value(index, u), self.slope(index, u))

    # -- export ----------------------------------------------------------

    def csv_header(self) -> str:
        n = self.n
        cols = (["t"]
                + [f"x_{i + 1}" for i in range(n)]
                + [f"S_{i + 1}" for i in range(n)]
                + [f"dx_{i + 1}" for i in range(n)]
                + [f"dS_{i + 1}" for i in range(n)])
        return ",".join(cols)

    def to_csv(self, target: str | IO[str]) -> None:
        data = np.column_stack([self.times, self.x.T, self.s.T, self.dx.T, self.ds.T])
        np.savetxt(target, data, delimiter=",", header=self.csv_header(),
                   comments="", fmt="%.12g")


# ---------------------------------------------------------------------------
# the engine
# ---------------------------------------------------------------------------


class _Engine:
    """One simulation run; owns the grid, state arrays, and prefix sums."""

    def __init__(self, spec: NetworkSpec, history: HistorySpec, ts: TimeScale,
                 t_end: float, t0: float, corrector_iters: int):
        if history.n != spec.n:
            raise ValueError("history width does not match the network size")
        if corrector_iters < 1:
            raise ValueError("corrector_iters must be at least 1")
        if not t_end > t0:
            raise ValueError("t_end must exceed the start time")
        self.spec = spec
        self.ts = ts
        self.n = spec.n
        self.corrector_iters = corrector_iters

        lo = t0 - history.window
        mn = ts.min_point()
        if np.isfinite(mn):
            lo = max(lo, mn)
        times, nu = ts.grid_with_graininess(lo, t_end)
        if len(times) < 2:
            raise SimulationError("the time scale holds too few points in range")
        k0 = int(np.argmin(np.abs(times - t0)))
        if abs(times[k0] - t0) > POINT_TOL:
            raise SimulationError(f"start time {t0!r} is not a point of the time scale")
        if k0 == len(times) - 1:
            raise SimulationError("no live points fall in (t0, t_end]")
        self.times = times
        self.k0 = k0
        width = np.empty_like(times)
        width[0] = 0.0
        width[1:] = np.diff(times)
        self.width = width
        dense = np.zeros(len(times), dtype=bool)
        dense[1:] = nu[1:] <= 0.5 * width[1:]
        self.dense = dense

        n, N = self.n, len(times)
        self.x = np.zeros((n, N))
        self.s = np.zeros((n, N))
        self.dx = np.zeros((n, N))
        self.ds = np.zeros((n, N))
        self.fv = np.zeros((n, N))     # f_j(x_j) samples
        self.slx = np.zeros((n, N))    # backward panel slopes of x
        self.sls = np.zeros((n, N))    # backward panel slopes of S
        self.fsl = np.zeros((n, N))    # f_j(panel slope of x_j) samples
        self.Fv = np.zeros((n, N))     # prefix integrals of f_j(x_j)
        self.Fsl = np.zeros((n, N))    # prefix integrals of f_j(x_j^nabla)

        # fill the history segment from the declared callables
        for k in range(k0 + 1):
            rel = times[k] - times[k0]
            for i in range(n):
                self.x[i, k] = history.stm[i](rel)
                self.dx[i, k] = history.stm_slope[i](rel)
                self.s[i, k] = history.ltm[i](rel)
                self.ds[i, k] = history.ltm_slope[i](rel)
        for i in range(n):
            fn = spec.activations[i].fn
            self.fv[i, :k0 + 1] = [fn(v) for v in self.x[i, :k0 + 1]]
        self.slx[:, 0] = self.dx[:, 0]
        self.sls[:, 0] = self.ds[:, 0]
        for k in range(1, k0 + 1):
            self.slx[:, k] = (self.x[:, k] - self.x[:, k - 1]) / width[k]
            self.sls[:, k] = (self.s[:, k] - self.s[:, k - 1]) / width[k]
        for i in range(n):
            fn = spec.activations[i].fn
            self.fsl[i, :k0 + 1] = [fn(v) for v in self.slx[i, :k0 + 1]]
        for k in range(1, k0 + 1):
            self._accumulate_prefixes(k)

        self.prev_rhs: tuple[np.ndarray, np.ndarray] | None = None

    # -- prefix bookkeeping ----------------------------------------------

    def _accumulate_prefixes(self, k: int) -> None:
        w = self.width[k]
        if self.dense[k]:
            panel_v = 0.5 * w * (self.fv[:, k - 1] + self.fv[:, k])
        else:
            panel_v = w * self.fv[:, k]
        self.Fv[:, k] = self.Fv[:, k - 1] + panel_v
        self.Fsl[:, k] = self.Fsl[:, k - 1] + w * self.fsl[:, k]

    def _prefix_state_at(self, j: int, lo: float) -> float:
        """Committed integral of f_j(x_j) from the grid start to ``lo``."""
        times = self.times
        idx = int(np.searchsorted(times, lo + POINT_TOL)) - 1
        if idx < 0:
            raise HistoryUnderflowError(
                f"distributed term reaches t={lo!r}, below the recorded range "
                f"(starts at {times[0]!r}); supply a longer history window"
            )
        if lo <= times[idx] + POINT_TOL:
            return float(self.Fv[j, idx])
        if self.dense[idx + 1]:
            w = times[idx + 1] - times[idx]
            lam = (lo - times[idx]) / w
            f_lo = self.fv[j, idx] + lam * (self.fv[j, idx + 1] - self.fv[j, idx])
            return float(self.Fv[j, idx] + 0.5 * (lo - times[idx]) * (self.fv[j, idx] + f_lo))
        return float(self.Fv[j, idx])  # scattered panel: mass sits at its right end

    def _prefix_slope_at(self, j: int, lo: float) -> float:
        """Committed integral of f_j(x_j^nabla) from the grid start to ``lo``."""
        times = self.times
        idx = int(np.searchsorted(times, lo + POINT_TOL)) - 1
        if idx < 0:
            raise HistoryUnderflowError(
                f"derivative-coupled term reaches t={lo!r}, below the recorded "
                f"range (starts at {times[0]!r}); supply a longer history window"
            )
        if lo <= times[idx] + POINT_TOL:
            return float(self.Fsl[j, idx])
        if self.dense[idx + 1]:
            return float(self.Fsl[j, idx] + (lo - times[idx]) * self.fsl[j, idx + 1])
        return float(self.Fsl[j, idx])

    # -- right-hand side at a live point ----------------------------------

    def _rhs_live(self, k: int, tbl, x_live: np.ndarray, s_live: np.ndarray,
                  sl_override: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        spec = self.spec
        times = self.times
        t = times[k]
        w = self.width[k]
        dense = bool(self.dense[k])
        x_prev = self.x[:, k - 1]
        s_prev = self.s[:, k - 1]
        if sl_override is not None:
            sl_live = sl_override
        elif w > POINT_TOL:
            sl_live = (x_live - x_prev) / w
        else:
            sl_live = self.slx[:, k]
        fx_live = np.array([spec.activations[j].fn(x_live[j]) for j in range(n)])
        fsl_live = np.array([spec.activations[j].fn(sl_live[j]) for j in range(n)])

        def lookup(arr: np.ndarray, live: np.ndarray, j: int, u: float) -> float:
            if u >= t - POINT_TOL:
                return float(live[j])
            if u > times[k - 1] + POINT_TOL:
                if dense:
                    lam = (u - times[k - 1]) / w
                    base = arr[j, k - 1]
                    return float(base + lam * (live[j] - base))
                return float(arr[j, k - 1])
            idx = int(np.searchsorted(times, u + POINT_TOL)) - 1
            if idx < 0:
                raise HistoryUnderflowError(
                    f"delayed lookup at t={u!r} reaches below the recorded range "
                    f"(starts at {times[0]!r}); supply a longer history window"
                )
            if u <= times[idx] + POINT_TOL:
                return float(arr[j, idx])
            if self.dense[idx + 1]:
                lam = (u - times[idx]) / (times[idx + 1] - times[idx])
                return float(arr[j, idx] + lam * (arr[j, idx + 1] - arr[j, idx]))
            return float(arr[j, idx])

        def integral_state(j: int, lo: float) -> float:
            if lo >= t - POINT_TOL:
                return 0.0
            if dense:
                live_part = 0.5 * w * (self.fv[j, k - 1] + fx_live[j])
            else:
                live_part = w * fx_live[j]
            if lo > times[k - 1] + POINT_TOL:  # window starts inside the live panel
                if dense:
                    lam = (lo - times[k - 1]) / w
                    f_lo = self.fv[j, k - 1] + lam * (fx_live[j] - self.fv[j, k - 1])
                    return float(live_part - 0.5 * (lo - times[k - 1]) * (self.fv[j, k - 1] + f_lo))
                return float(live_part)
            base = self.Fv[j, k - 1] - self._prefix_state_at(j, lo)
            return float(base + live_part)

        def integral_slope(j: int, lo: float) -> float:
            if lo >= t - POINT_TOL:
                return 0.0
            live_part = w * fsl_live[j]
            if lo > times[k - 1] + POINT_TOL:
                if dense:
                    return float(live_part - (lo - times[k - 1]) * fsl_live[j])
                return float(live_part)
            base = self.Fsl[j, k - 1] - self._prefix_slope_at(j, lo)
            return float(base + live_part)

        fx = np.empty(n)
        fs = np.empty(n)
        for i in range(n):
            acc = -tbl.alpha[i] * lookup(self.x, x_live, i, t - tbl.eta[i])
            for j in range(n):
                acc += tbl.D[i, j] * fx_live[j]
                acc += tbl.Dtau[i, j] * spec.activations[j].fn(
                    lookup(self.x, x_live, j, t - tbl.tau[i, j]))
                acc += tbl.Dbar[i, j] * integral_state(j, t - tbl.sigma_d[i, j])
                acc += tbl.Dtil[i, j] * integral_slope(j, t - tbl.zeta[i, j])
            acc += tbl.B[i] * s_live[i] + tbl.I[i]
            fx[i] = acc
            fs[i] = (-tbl.c[i] * lookup(self.s, s_live, i, t - tbl.varsigma[i])
                     + tbl.E[i] * fx_live[i] + tbl.J[i])
        return fx, fs

    def _rhs_at_committed(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        tbl = self.spec.coeffs_at(float(self.times[k]))
        if k == 0:
            raise SimulationError("cannot evaluate the dynamics at the grid start")
        return self._rhs_live(k, tbl, self.x[:, k], self.s[:, k],
                              sl_override=self.slx[:, k])

    # -- stepping ----------------------------------------------------------

    def _commit(self, k: int, x_new: np.ndarray, s_new: np.ndarray) -> None:
        t = float(self.times[k])
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(s_new))):
            raise StepFailureError(t, "state became non-finite")
        w = self.width[k]
        self.x[:, k] = x_new
        self.s[:, k] = s_new
        self.slx[:, k] = (x_new - self.x[:, k - 1]) / w
        self.sls[:, k] = (s_new - self.s[:, k - 1]) / w
        for i in range(self.n):
            fn = self.spec.activations[i].fn
            self.fv[i, k] = fn(x_new[i])
            self.fsl[i, k] = fn(self.slx[i, k])
        self._accumulate_prefixes(k)

    def _step_dense(self, k: int, tbl) -> None:
        w = self.width[k]
        if self.prev_rhs is None:
            self.prev_rhs = self._rhs_at_committed(k - 1)
        k1x, k1s = self.prev_rhs
        xp = self.x[:, k - 1] + w * k1x
        sp = self.s[:, k - 1] + w * k1s
        if not (np.all(np.isfinite(xp)) and np.all(np.isfinite(sp))):
            raise StepFailureError(float(self.times[k]), "predictor became non-finite")
        k2x, k2s = self._rhs_live(k, tbl, xp, sp)
        x_new = self.x[:, k - 1] + 0.5 * w * (k1x + k2x)
        s_new = self.s[:, k - 1] + 0.5 * w * (k1s + k2s)
        self._commit(k, x_new, s_new)
        k3x, k3s = self._rhs_live(k, tbl, x_new, s_new)
        self.dx[:, k] = k3x
        self.ds[:, k] = k3s
        self.prev_rhs = (k3x, k3s)

    def _step_scattered(self, k: int, tbl) -> None:
        t = float(self.times[k])
        w = self.width[k]
        x_prev = self.x[:, k - 1].copy()
        s_prev = self.s[:, k - 1].copy()
        x_live, s_live = x_prev.copy(), s_prev.copy()
        first_gap = last_gap = 0.0
        for m in range(self.corrector_iters):
            fx, fs = self._rhs_live(k, tbl, x_live, s_live)
            x_next = x_prev + w * fx
            s_next = s_prev + w * fs
            if not (np.all(np.isfinite(x_next)) and np.all(np.isfinite(s_next))):
                raise StepFailureError(t, "fixed-point iteration became non-finite")
            gap = max(np.max(np.abs(x_next - x_live)), np.max(np.abs(s_next - s_live)))
            if m == 0:
                first_gap = gap
            last_gap = gap
            x_live, s_live = x_next, s_next
        scale = 1.0 + max(np.max(np.abs(x_live)), np.max(np.abs(s_live)))
        if (self.corrector_iters >= 2 and last_gap > 1e-9 * scale
                and last_gap > 0.5 * first_gap):
            raise StepFailureError(
                t, f"fixed-point iteration did not contract "
                   f"(residual {last_gap:.3e} from initial {first_gap:.3e}); "
                   f"the implicit update appears divergent at this gap size")
        self._commit(k, x_live, s_live)
        self.dx[:, k] = self.slx[:, k]
        self.ds[:, k] = self.sls[:, k]
        self.prev_rhs = None

    def run(self) -> Trajectory:
        for k in range(self.k0 + 1, len(self.times)):
            tbl = self.spec.coeffs_at(float(self.times[k]))
            if self.dense[k]:
                self._step_dense(k, tbl)
            else:
                self._step_scattered(k, tbl)
        return Trajectory(
            ts=self.ts, times=self.times, start_index=self.k0,
            x=self.x, s=self.s, dx=self.dx, ds=self.ds,
            _panel_dense=self.dense, _slope_x=self.slx, _slope_s=self.sls,
        )


def simulate(spec: NetworkSpec, history: HistorySpec, ts: TimeScale,
             t_end: float, t0: float = 0.0, corrector_iters: int = 4) -> Trajectory:
    """Advance the network from ``t0`` to ``t_end`` over the scale grid.

    ``history`` supplies initial data on ``[t0 - window, t0]`` (relative
    times).  Returns a :class:`Trajectory` whose arrays cover the history
    segment (as far as the scale reaches) plus every scale point in
    ``(t0, t_end]``.
    """
    return _Engine(spec, history, ts, t_end, t0, corrector_iters).run()


# ---------------------------------------------------------------------------
# norms and distances
# ---------------------------------------------------------------------------


def history_norm(hist_a: HistorySpec, hist_b: HistorySpec, ts: TimeScale,
                 t0: float = 0.0) -> float:
    """Sup distance between two history specifications.

    The supremum runs over every scale point of ``[t0 - window, t0]`` and
    over all ``4 n`` component series: both state families and both declared
    derivative families.
    """
    if hist_a.n != hist_b.n:
        raise ValueError("histories must have the same width")
    window = max(hist_a.window, hist_b.window)
    lo = t0 - window
    mn = ts.min_point()
    if np.isfinite(mn):
        lo = max(lo, mn)
    grid = ts.grid(lo, t0)
    if len(grid) == 0:
        raise ValueError("no scale points fall in the history window")
    rel = grid - t0
    best = 0.0
    for i in range(hist_a.n):
        for fa, fb in ((hist_a.stm[i], hist_b.stm[i]),
                       (hist_a.stm_slope[i], hist_b.stm_slope[i]),
                       (hist_a.ltm[i], hist_b.ltm[i]),
                       (hist_a.ltm_slope[i], hist_b.ltm_slope[i])):
            gaps = [abs(float(fa(r)) - float(fb(r))) for r in rel]
            best = max(best, max(gaps))
    return best


def distance_series(traj_a: Trajectory, traj_b: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise sup distance between two runs over their live segment.

    At each live grid point the distance is the largest absolute gap across
    all ``4 n`` component series (states and derivative traces).  The runs
    must share the same grid.
    """
    if traj_a.times.shape != traj_b.times.shape or not np.allclose(
            traj_a.times, traj_b.times, atol=POINT_TOL, rtol=0.0):
        raise ValueError("trajectories do not share a grid")
    if traj_a.start_index != traj_b.start_index:
        raise ValueError("trajectories do not share a start index")
    k0 = traj_a.start_index
    stacks = []
    for arr_a, arr_b in ((traj_a.x, traj_b.x), (traj_a.s, traj_b.s),
                         (traj_a.dx, traj_b.dx), (traj_a.ds, traj_b.ds)):
        stacks.append(np.abs(arr_a[:, k0:] - arr_b[:, k0:]))
    dist = np.max(np.vstack(stacks), axis=0)
    return traj_a.times[k0:].copy(), dist


def trajectory_norm_distance(traj_a: Trajectory, traj_b: Trajectory, t: float) -> float:
    """Sup distance between two runs at one grid time ``t``.

    The largest absolute gap at ``t`` over all ``4 n`` component series
    (states and derivative traces).  ``t`` must be a grid point shared by
    both runs.
    """
    times, dist = distance_series(traj_a, traj_b)
    k = int(np.argmin(np.abs(times - t)))
    if abs(times[k] - t) > POINT_TOL:
        raise ValueError(f"t={t!r} is not a live grid point of these runs")
    return float(dist[k])
