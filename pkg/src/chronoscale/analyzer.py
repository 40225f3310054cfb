"""Empirical analysis of simulated runs.

Three instruments:

* :func:`decay_fit` -- least-squares exponential decay rate of a distance
  series (slope of ``log d`` against ``t``, negated), with an ``inf``
  sentinel for pairs that have converged to numerical identity;
* :func:`verify_bound` -- checks a decay certificate ``(lambda, M)``
  against a simulated trajectory pair: the distance between the runs must
  stay below ``M * nexp(-lambda)(t, t0) * |history gap|`` at every grid
  point, where the envelope is the nabla exponential of the certified rate
  composed with the scale's graininess;
* :func:`translation_error` / :func:`scan_translation_numbers` -- an
  almost-periodicity diagnostic: the shifts ``tau`` whose translated copy of
  a signal stays uniformly within ``epsilon`` of the original.  With finite
  windows and a finite ``epsilon`` this is an evidence scan, never a proof,
  and it is reported as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .conditions import Certificate
from .simulator import HistorySpec, Trajectory, distance_series, history_norm
from .timescale import TimeScale, circle_minus

__all__ = [
    "decay_fit",
    "StabilityReport",
    "verify_bound",
    "write_stability_csv",
    "translation_error",
    "TranslationScan",
    "scan_translation_numbers",
]

# distances below this are treated as "numerically identical"
_IDENTICAL_TOL = 1e-14


def decay_fit(times: Sequence[float], distances: Sequence[float],
              burn_in: float | None = None) -> tuple[float, float]:
    """Fitted exponential decay rate and fit quality of a distance series.

    Drops every sample earlier than ``times[0] + burn_in`` (default burn-in:
    20% of the observed horizon), fits ``log d = a - rate * t`` by least
    squares over the remaining strictly positive distances, and returns
    ``(rate, r_squared)``.  If every retained distance is below ``1e-14``
    the pair has converged to numerical identity and the sentinel
    ``(inf, 1.0)`` is returned.  Requires at least 10 positive samples
    after burn-in otherwise.
    """
    t = np.asarray(times, dtype=float)
    d = np.asarray(distances, dtype=float)
    if t.shape != d.shape or t.ndim != 1:
        raise ValueError("times and distances must be 1-d arrays of equal length")
    if len(t) == 0:
        raise ValueError("empty distance series")
    if burn_in is None:
        burn_in = 0.2 * (t[-1] - t[0])
    keep = t >= t[0] + burn_in
    t, d = t[keep], d[keep]
    if len(d) and np.max(d) < _IDENTICAL_TOL:
        return math.inf, 1.0
    pos = d > 0.0
    if pos.sum() < 10:
        raise ValueError(
            f"need at least 10 positive distances after burn-in, have {int(pos.sum())}")
    t, logd = t[pos], np.log(d[pos])
    design = np.column_stack([np.ones(len(t)), t])
    coef, *_ = np.linalg.lstsq(design, logd, rcond=None)
    resid = logd - design @ coef
    ss_res = float(np.dot(resid, resid))
    centered = logd - logd.mean()
    ss_tot = float(np.dot(centered, centered))
    r_squared = 1.0 if ss_tot < 1e-30 else 1.0 - ss_res / ss_tot
    return float(-coef[1]), float(r_squared)


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of checking a decay certificate against a simulated pair.

    ``bound_margin`` is the minimum over the live grid of
    ``envelope(t) - distance(t)`` (absolute units); ``violated`` is true
    when some distance exceeds its envelope value by more than the absolute
    plus relative tolerance.  The sampled series are kept for CSV export.
    """

    lam: float
    big_m: float
    history_gap: float
    lambda_fit: float
    r_squared: float
    bound_margin: float
    min_relative_margin: float
    violated: bool
    times: np.ndarray
    distances: np.ndarray
    bounds: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.times)

    def margins(self) -> np.ndarray:
        return self.bounds - self.distances

    def to_text(self) -> str:
        lines = [
            f"lambda {self.lam!r}",
            f"M {self.big_m!r}",
            f"history_gap {self.history_gap!r}",
            f"points {self.n_points}",
            f"lambda_fit {self.lambda_fit!r}",
            f"r_squared {self.r_squared!r}",
            f"min_margin {self.bound_margin!r}",
            f"min_margin_rel {self.min_relative_margin!r}",
            f"violated {'true' if self.violated else 'false'}",
        ]
        return "\n".join(lines) + "\n"


def verify_bound(traj_a: Trajectory, traj_b: Trajectory,
                 hist_a: HistorySpec, hist_b: HistorySpec,
                 cert: Certificate, ts: TimeScale,
                 abs_tol: float = 1e-9, rel_tol: float = 1e-6,
                 burn_in: float | None = None) -> StabilityReport:
    """Check the certified decay envelope against a simulated pair.

    Evaluates, at every live grid point, the inequality

        distance(t) <= M * nexp(circle_minus(lambda, nu))(t, t0) * gap0,

    where ``gap0`` is the sup distance between the two supplied histories.
    A point violates the bound when the distance exceeds the envelope by
    more than ``abs_tol`` plus ``rel_tol`` times the envelope.  Raises
    :class:`~chronoscale.timescale.RegressivityError` when the certified
    rate is not admissible on this scale (``1 - nu*lambda <= 0`` somewhere),
    which callers should treat as a failed certificate.
    """
    times, dist = distance_series(traj_a, traj_b)
    gap0 = history_norm(hist_a, hist_b, ts, t0=float(times[0]))
    grid, env = ts.nabla_exp_grid(
        lambda u: circle_minus(cert.lam, ts.graininess(u)),
        float(times[0]), float(times[-1]), t0=float(times[0]))
    if len(grid) != len(times) or not np.allclose(grid, times, atol=1e-9, rtol=0.0):
        raise ValueError("envelope grid does not match the trajectory grid")
    bounds = cert.big_m * env * gap0
    margins = bounds - dist
    rel = margins / np.maximum(bounds, 1e-300)
    violated = bool(np.any(dist > bounds + abs_tol + rel_tol * bounds))
    try:
        lam_fit, r2 = decay_fit(times, dist, burn_in=burn_in)
    except ValueError:
        lam_fit, r2 = math.nan, math.nan
    return StabilityReport(
        lam=cert.lam, big_m=cert.big_m, history_gap=gap0,
        lambda_fit=lam_fit, r_squared=r2,
        bound_margin=float(np.min(margins)),
        min_relative_margin=float(np.min(rel)),
        violated=violated,
        times=times, distances=dist, bounds=bounds,
    )


def write_stability_csv(report: StabilityReport, target: str | IO[str]) -> None:
    """Write ``t,distance,bound,margin`` rows for external plotting."""
    data = np.column_stack([report.times, report.distances, report.bounds,
                            report.margins()])
    np.savetxt(target, data, delimiter=",", header="t,distance,bound,margin",
               comments="", fmt="%.12g")


# ---------------------------------------------------------------------------
# almost-periodicity diagnostics
# ---------------------------------------------------------------------------


def translation_error(times: Sequence[float], values: Sequence[float],
                      tau: float, window: tuple[float, float]) -> float:
    """Sup of ``|v(t + tau) - v(t)|`` over sample times in ``window``.

    Off-sample lookups interpolate linearly.  Both the window and its
    translate must be covered by the series.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    a, b = window
    if not (b >= a):
        raise ValueError("window must be ordered")
    if a < t[0] - 1e-9 or b + tau > t[-1] + 1e-9 or a + tau < t[0] - 1e-9:
        raise ValueError(
            f"window [{a}, {b}] shifted by {tau} is not covered by the series "
            f"range [{t[0]}, {t[-1]}]")
    mask = (t >= a) & (t <= b)
    if not mask.any():
        raise ValueError("no samples fall inside the window")
    base_t = t[mask]
    base_v = v[mask]
    shifted = np.interp(base_t + tau, t, v)
    return float(np.max(np.abs(shifted - base_v)))


@dataclass(frozen=True)
class TranslationScan:
    """Result of an epsilon-translation scan.

    ``hits`` are the shifts whose translation error stays within
    ``epsilon``; ``max_gap`` is the largest spacing between consecutive
    hits (0 when fewer than two hits).  A dense hit set with small gaps is
    evidence toward almost periodicity over the scanned range -- never a
    proof: the window, the shift range, and epsilon are all finite.
    """

    epsilon: float
    window: tuple[float, float]
    taus: np.ndarray
    errors: np.ndarray
    hits: np.ndarray
    max_gap: float

    def summary_lines(self) -> list[str]:
        lines = [
            f"epsilon {self.epsilon!r}",
            f"window {self.window[0]!r} {self.window[1]!r}",
            f"shifts_scanned {len(self.taus)}",
            f"hits {len(self.hits)}",
            f"max_gap {self.max_gap!r}",
        ]
        if len(self.hits):
            head = ", ".join(f"{h:g}" for h in self.hits[:12])
            more = " ..." if len(self.hits) > 12 else ""
            lines.append(f"hit_shifts {head}{more}")
        return lines


def scan_translation_numbers(times: Sequence[float], values: Sequence[float],
                             epsilon: float,
                             tau_range: tuple[float, float] = (1.0, 100.0),
                             tau_step: float = 0.1,
                             window: tuple[float, float] | None = None,
                             ) -> TranslationScan:
    """Scan shifts in ``tau_range`` for epsilon-translation numbers.

    ``window`` defaults to the widest interval whose largest translate
    still fits inside the series.  Returns every scanned shift with its
    translation error, the hit list, and the largest gap between
    consecutive hits.
    """
    if tau_step <= 0:
        raise ValueError("tau_step must be positive")
    t = np.asarray(times, dtype=float)
    lo, hi = tau_range
    if not hi >= lo:
        raise ValueError("tau_range must be ordered")
    if window is None:
        window = (float(t[0]), float(t[-1]) - hi)
        if window[1] <= window[0]:
            raise ValueError("series too short for this shift range")
    count = int(math.floor((hi - lo) / tau_step + 1e-9)) + 1
    taus = lo + tau_step * np.arange(count)
    errors = np.array([translation_error(times, values, float(tau), window)
                       for tau in taus])
    hits = taus[errors <= epsilon]
    max_gap = float(np.max(np.diff(hits))) if len(hits) >= 2 else 0.0
    return TranslationScan(epsilon=float(epsilon), window=window, taus=taus,
                           errors=errors, hits=hits, max_gap=max_gap)
