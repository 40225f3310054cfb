"""Solvability (contraction) checks and the exponential-decay certificate.

Everything here works on a :class:`BoundSet`: per-coefficient envelopes
(sup/inf of absolute values) plus the supremum ``nu_sup`` of the time scale's
backward graininess.  Bounds are sampled from a model's expressions by
:func:`compute_bounds`, with user overrides taking precedence.

Solvability check
-----------------
For a candidate ball radius ``r`` the check assembles, per neuron ``i`` (with
Lipschitz bounds ``L_j`` and activation offsets ``f0_j = |f_j(0)|``):

    P_i  = alpha_i+ eta_i+ r
         + sum_j D_ij+    (L_j r + f0_j)
         + sum_j Dtau_ij+ (L_j r + f0_j)
         + sum_j Dbar_ij+ sigma_ij+ (L_j r + f0_j)
         + sum_j Dtil_ij+ zeta_ij+  (L_j r + f0_j)
         + B_i+ r + I_i+,
    Q_i  = c_i+ varsigma_i+ r + E_i+ (L_i r + f0_i) + J_i+,

    Pbar_i = alpha_i+ eta_i+ + sum_j D_ij+ L_j [+ sum_j Dtau_ij+ L_j]
           + sum_j Dbar_ij+ sigma_ij+ L_j + sum_j Dtil_ij+ zeta_ij+ L_j
           + B_i+,
    Qbar_i = c_i+ varsigma_i+ + E_i+ L_i,

and evaluates the two ratio families

    invariance:  max_i { P_i/alpha_i-,  (1 + alpha_i+/alpha_i-) P_i,
                         Q_i/c_i-,      (1 + c_i+/c_i-) Q_i }          <= r,
    contraction: max_i { same four with Pbar/Qbar }            =: kappa < 1.

Both conditions together guarantee a unique bounded solution inside the ball
of radius ``r`` (in the norm that takes the max over states *and* their nabla
derivatives).

The bracketed ``Dtau`` sum in ``Pbar`` is controlled by
``include_delayed_feedback``: ``True`` (default) is the faithful contraction
constant; ``False`` reproduces a widely used reduced tabulation that omits
the discretely-delayed feedback from the contraction side only.  ``P`` always
includes every term.

Decay certificate
-----------------
``find_lambda`` locates the largest decay rate ``lam`` in
``(0, min(alpha-, c-))`` at which four per-neuron margin functions stay
positive (``h_functions``): with ``nu = nu_sup`` and the beta-weighted slope

    W_i(b) = alpha_i+ eta_i+ e^{b eta_i+}
           + sum_j D_ij+ L_j
           + sum_j Dtau_ij+ L_j e^{b tau_ij+}
           + sum_j Dbar_ij+ L_j sigma_ij+ e^{b sigma_ij+}
           + sum_j Dtil_ij+ L_j zeta_ij+  e^{b zeta_ij+},

    H_i(b)      = alpha_i- - b - ( e^{b nu} W_i(b) + B_i+ )
    Hbar_i(b)   = c_i- - b - ( e^{b nu} c_i+ varsigma_i+ e^{b varsigma_i+}
                               + E_i+ L_i )
    Hstar_i(b)  = alpha_i- - b
                  - ( alpha_i+ e^{b nu} + alpha_i- - b ) ( W_i(b) + B_i+ )
    Hbarstar_i(b) = c_i- - b
                  - ( c_i+ e^{b nu} + c_i- - b )
                    ( c_i+ varsigma_i+ e^{b varsigma_i+} + E_i+ L_i ).

At ``b = 0`` their positivity is exactly the contraction condition, so a
passing check guarantees a positive rate exists.  The overshoot constant is

    M = max_i max{ alpha_i- / Pbar_i,  c_i- / Qbar_i }  (> 1 when kappa < 1),

and the certified envelope for the gap between any two solutions is
``M * nexp_{circleminus lam}(t, t0) * (initial history norm)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coeffs import BoundPair, bound_sup_inf
from .network import NetworkSpec
from .timescale import TimeScale

__all__ = [
    "ConditionsError",
    "InfeasibleError",
    "BoundSet",
    "compute_bounds",
    "compute_PQ",
    "compute_PQbar",
    "H3Report",
    "check_H3",
    "search_r",
    "DEFAULT_R_GRID",
    "HValues",
    "h_functions",
    "Certificate",
    "find_lambda",
]


class ConditionsError(ValueError):
    """A solvability/certificate computation could not proceed."""


class InfeasibleError(ConditionsError):
    """The contraction check fails, so no certificate exists."""


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundSet:
    """Coefficient envelopes of one model plus the scale's graininess sup.

    ``*_sup`` holds sup|coefficient| (arrays over neurons / neuron pairs);
    ``alpha_inf``/``c_inf`` hold the infima of the decay rates, which must be
    positive for any of the checks to make sense.  ``sources`` maps
    coefficient keys to "sampled" or "override" for reporting.
    """

    n: int
    alpha_sup: np.ndarray
    alpha_inf: np.ndarray
    c_sup: np.ndarray
    c_inf: np.ndarray
    B_sup: np.ndarray
    E_sup: np.ndarray
    I_sup: np.ndarray
    J_sup: np.ndarray
    eta_sup: np.ndarray
    varsigma_sup: np.ndarray
    D_sup: np.ndarray
    Dtau_sup: np.ndarray
    Dbar_sup: np.ndarray
    Dtil_sup: np.ndarray
    tau_sup: np.ndarray
    sigma_sup: np.ndarray
    zeta_sup: np.ndarray
    nu_sup: float = 0.0
    sources: dict[str, str] = field(default_factory=dict)

    def theta(self) -> float:
        """Largest delay bound: how much history the dynamics can reach."""
        return float(
            max(
                self.eta_sup.max(),
                self.varsigma_sup.max(),
                self.tau_sup.max(),
                self.sigma_sup.max(),
                self.zeta_sup.max(),
            )
        )

    def decay_cap(self) -> float:
        """min over neurons of the decay-rate infima: the rate search ceiling."""
        return float(min(self.alpha_inf.min(), self.c_inf.min()))

    def summary_lines(self) -> list[str]:
        """Human-readable dump of every envelope, tagged by provenance."""
        out = ["coefficient bounds:"]

        def tag(key: str) -> str:
            return self.sources.get(key, "sampled")

        for name, sup_field in _SUP_FIELD.items():
            arr = getattr(self, sup_field)
            if arr.ndim == 1:
                for i in range(self.n):
                    line = f"  {name}.{i + 1}: sup = {arr[i]:.6g}"
                    if name == "alpha":
                        line += f", inf = {self.alpha_inf[i]:.6g}"
                    elif name == "c":
                        line += f", inf = {self.c_inf[i]:.6g}"
                    out.append(line + f"  [{tag(f'{name}.{i + 1}')}]")
            else:
                for i in range(self.n):
                    for j in range(self.n):
                        out.append(
                            f"  {name}.{i + 1}.{j + 1}: sup = {arr[i, j]:.6g}"
                            f"  [{tag(f'{name}.{i + 1}.{j + 1}')}]"
                        )
        out.append(f"  graininess sup = {self.nu_sup:.6g}")
        return out


_SUP_FIELD = {
    "alpha": "alpha_sup",
    "c": "c_sup",
    "B": "B_sup",
    "E": "E_sup",
    "I": "I_sup",
    "J": "J_sup",
    "eta": "eta_sup",
    "varsigma": "varsigma_sup",
    "D": "D_sup",
    "Dtau": "Dtau_sup",
    "Dbar": "Dbar_sup",
    "Dtil": "Dtil_sup",
    "tau": "tau_sup",
    "sigma_d": "sigma_sup",
    "zeta": "zeta_sup",
}


def compute_bounds(
    spec: NetworkSpec,
    ts: TimeScale | None = None,
    t0: float = 0.0,
    t1: float = 1000.0,
    samples: int = 100_000,
    nu_window: tuple[float, float] = (0.0, 100.0),
) -> BoundSet:
    """Sample sup/inf envelopes for every coefficient of ``spec``.

    Entries of ``spec.bound_overrides`` replace the sampled values.  When a
    time scale is supplied, ``nu_sup`` is taken as the graininess supremum
    over ``nu_window``; otherwise it is 0 (purely dense analysis).
    """
    n = spec.n
    sup: dict[str, np.ndarray] = {
        name: np.zeros(n) for name in NetworkSpec.VECTOR_FIELDS
    }
    sup.update({name: np.zeros((n, n)) for name in NetworkSpec.MATRIX_FIELDS})
    inf_alpha = np.zeros(n)
    inf_c = np.zeros(n)
    sources: dict[str, str] = {}

    for key, expr in spec.coefficient_items():
        parts = key.split(".")
        name = parts[0]
        idx = tuple(int(p) - 1 for p in parts[1:])
        override = spec.bound_overrides.get(key)
        pair = override if override is not None else bound_sup_inf(expr, t0, t1, samples)
        sources[key] = pair.source
        sup[name][idx] = pair.sup_abs
        if name == "alpha":
            inf_alpha[idx] = pair.inf_abs
        elif name == "c":
            inf_c[idx] = pair.inf_abs

    nu_sup = ts.graininess_sup(*nu_window) if ts is not None else 0.0
    return BoundSet(
        n=n,
        alpha_sup=sup["alpha"],
        alpha_inf=inf_alpha,
        c_sup=sup["c"],
        c_inf=inf_c,
        B_sup=sup["B"],
        E_sup=sup["E"],
        I_sup=sup["I"],
        J_sup=sup["J"],
        eta_sup=sup["eta"],
        varsigma_sup=sup["varsigma"],
        D_sup=sup["D"],
        Dtau_sup=sup["Dtau"],
        Dbar_sup=sup["Dbar"],
        Dtil_sup=sup["Dtil"],
        tau_sup=sup["tau"],
        sigma_sup=sup["sigma_d"],
        zeta_sup=sup["zeta"],
        nu_sup=nu_sup,
        sources=sources,
    )


# ---------------------------------------------------------------------------
# solvability quantities
# ---------------------------------------------------------------------------


def _check_positive_decay(b: BoundSet) -> None:
    if np.any(b.alpha_inf <= 0.0) or np.any(b.c_inf <= 0.0):
        raise ConditionsError(
            "decay-rate infima must be positive (alpha_inf and c_inf)"
        )


def _slope_sums(
    b: BoundSet,
    L: np.ndarray,
    include_delayed_feedback: bool,
    beta: float = 0.0,
) -> np.ndarray:
    """The per-neuron slope sum W_i(beta); beta = 0 gives the plain sum."""
    leak = b.alpha_sup * b.eta_sup * np.exp(beta * b.eta_sup)
    inst = b.D_sup @ L
    lagged = (b.Dtau_sup * np.exp(beta * b.tau_sup)) @ L
    spread = (b.Dbar_sup * b.sigma_sup * np.exp(beta * b.sigma_sup)) @ L
    neutral = (b.Dtil_sup * b.zeta_sup * np.exp(beta * b.zeta_sup)) @ L
    total = leak + inst + spread + neutral
    if include_delayed_feedback:
        total = total + lagged
    return total


def compute_PQ(
    b: BoundSet,
    L: Sequence[float],
    f0: Sequence[float],
    r: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Existence-side numerators (P, Q) at ball radius ``r``.

    These always include every coupling term (the module docstring's P_i and
    Q_i); the reduced-tabulation flag applies only to the contraction side.
    """
    L = np.asarray(L, dtype=float)
    f0 = np.asarray(f0, dtype=float)
    lr = L * r + f0
    P = (
        b.alpha_sup * b.eta_sup * r
        + b.D_sup @ lr
        + b.Dtau_sup @ lr
        + (b.Dbar_sup * b.sigma_sup) @ lr
        + (b.Dtil_sup * b.zeta_sup) @ lr
        + b.B_sup * r
        + b.I_sup
    )
    Q = b.c_sup * b.varsigma_sup * r + b.E_sup * (L * r + f0) + b.J_sup
    return P, Q


def compute_PQbar(
    b: BoundSet,
    L: Sequence[float],
    include_delayed_feedback: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Contraction-side numerators (Pbar, Qbar); see the module docstring."""
    L = np.asarray(L, dtype=float)
    Pbar = _slope_sums(b, L, include_delayed_feedback) + b.B_sup
    Qbar = b.c_sup * b.varsigma_sup + b.E_sup * L
    return Pbar, Qbar


@dataclass(frozen=True)
class H3Report:
    """Outcome of the two-part solvability check at radius ``r``.

    The ratio arrays follow the tabulation order used for reporting:

    * ``r_ratios``: [P_1/alpha_1-, (1+alpha_1+/alpha_1-) P_1,
      P_2/alpha_2-, (1+...) P_2, ..., Q_1/c_1-, ..., Q_n/c_n-,
      (1+c_1+/c_1-) Q_1, ..., (1+c_n+/c_n-) Q_n]
      (per-neuron plain/amplified pairs for P, then all plain Q, then all
      amplified Q);
    * ``kappa_ratios``: [Pbar_1/alpha_1-, ..., Pbar_n/alpha_n-,
      (1+alpha_1+/alpha_1-) Pbar_1, ..., Qbar_1/c_1-, ...,
      (1+c_1+/c_1-) Qbar_1, ...]
      (all plain Pbar, all amplified Pbar, all plain Qbar, all amplified
      Qbar).

    ``feasible`` is ``max_r_expr <= r and kappa < 1``.
    """

    r: float
    include_delayed_feedback: bool
    P: np.ndarray
    Q: np.ndarray
    Pbar: np.ndarray
    Qbar: np.ndarray
    r_ratios: np.ndarray
    kappa_ratios: np.ndarray
    max_r_expr: float
    kappa: float
    feasible: bool

    def summary_lines(self) -> list[str]:
        out = [f"radius r = {self.r:g}"]
        for i in range(len(self.P)):
            out.append(
                f"  neuron {i + 1}: P = {self.P[i]:.6f}  Q = {self.Q[i]:.6f}  "
                f"Pbar = {self.Pbar[i]:.6f}  Qbar = {self.Qbar[i]:.6f}"
            )
        out.append(
            "  invariance ratios: "
            + ", ".join(f"{v:.4f}" for v in self.r_ratios)
        )
        out.append(
            "  contraction ratios: "
            + ", ".join(f"{v:.4f}" for v in self.kappa_ratios)
        )
        out.append(
            f"  max invariance expression = {self.max_r_expr:.6f} "
            f"(needs <= r = {self.r:g})"
        )
        out.append(f"  kappa = {self.kappa:.6f} (needs < 1)")
        out.append(f"  feasible: {'yes' if self.feasible else 'no'}")
        return out


def check_H3(
    b: BoundSet,
    L: Sequence[float],
    f0: Sequence[float],
    r: float,
    include_delayed_feedback: bool = True,
) -> H3Report:
    """Run the invariance + contraction check at ball radius ``r``."""
    _check_positive_decay(b)
    L = np.asarray(L, dtype=float)
    f0 = np.asarray(f0, dtype=float)
    P, Q = compute_PQ(b, L, f0, r)
    Pbar, Qbar = compute_PQbar(b, L, include_delayed_feedback)

    amp_alpha = 1.0 + b.alpha_sup / b.alpha_inf
    amp_c = 1.0 + b.c_sup / b.c_inf

    r_ratios = np.concatenate(
        [
            np.stack([P / b.alpha_inf, amp_alpha * P], axis=1).reshape(-1),
            Q / b.c_inf,
            amp_c * Q,
        ]
    )
    kappa_ratios = np.concatenate(
        [Pbar / b.alpha_inf, amp_alpha * Pbar, Qbar / b.c_inf, amp_c * Qbar]
    )
    max_r_expr = float(r_ratios.max())
    kappa = float(kappa_ratios.max())
    return H3Report(
        r=r,
        include_delayed_feedback=include_delayed_feedback,
        P=P,
        Q=Q,
        Pbar=Pbar,
        Qbar=Qbar,
        r_ratios=r_ratios,
        kappa_ratios=kappa_ratios,
        max_r_expr=max_r_expr,
        kappa=kappa,
        feasible=bool(max_r_expr <= r and kappa < 1.0),
    )


DEFAULT_R_GRID: np.ndarray = np.round(np.arange(0.10, 1.0 + 1e-9, 0.05), 10)


def search_r(
    b: BoundSet,
    L: Sequence[float],
    f0: Sequence[float],
    r_grid: Sequence[float] | None = None,
    include_delayed_feedback: bool = True,
) -> float | None:
    """Smallest radius in ``r_grid`` passing :func:`check_H3`, or ``None``."""
    grid = DEFAULT_R_GRID if r_grid is None else np.asarray(r_grid, dtype=float)
    for r in np.sort(grid):
        if check_H3(b, L, f0, float(r), include_delayed_feedback).feasible:
            return float(r)
    return None


# ---------------------------------------------------------------------------
# decay certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HValues:
    """The four margin-function families evaluated at one rate ``beta``."""

    beta: float
    h: np.ndarray
    h_bar: np.ndarray
    h_star: np.ndarray
    h_bar_star: np.ndarray

    def min_value(self) -> float:
        return float(
            min(self.h.min(), self.h_bar.min(), self.h_star.min(), self.h_bar_star.min())
        )

    def all_positive(self, margin: float = 0.0) -> bool:
        return self.min_value() > margin


def h_functions(
    b: BoundSet,
    L: Sequence[float],
    beta: float,
    include_delayed_feedback: bool = True,
) -> HValues:
    """Evaluate H, Hbar, Hstar, Hbarstar at rate ``beta``; module docstring."""
    _check_positive_decay(b)
    L = np.asarray(L, dtype=float)
    e_nu = math.exp(beta * b.nu_sup)
    W = _slope_sums(b, L, include_delayed_feedback, beta=beta)
    # Weighted LTM leakage term; note e^{beta*nu_sup} multiplies only this
    # term in h_bar (the coupling E+L stays unweighted), while h_bar_star
    # applies no e^{beta*nu_sup} inside its second factor at all.
    ltm_leak = b.c_sup * b.varsigma_sup * np.exp(beta * b.varsigma_sup)
    ltm_core = ltm_leak + b.E_sup * L

    h = b.alpha_inf - beta - (e_nu * W + b.B_sup)
    h_bar = b.c_inf - beta - (e_nu * ltm_leak + b.E_sup * L)
    h_star = b.alpha_inf - beta - (b.alpha_sup * e_nu + b.alpha_inf - beta) * (W + b.B_sup)
    h_bar_star = b.c_inf - beta - (b.c_sup * e_nu + b.c_inf - beta) * ltm_core
    return HValues(beta=beta, h=h, h_bar=h_bar, h_star=h_star, h_bar_star=h_bar_star)


@dataclass(frozen=True)
class Certificate:
    """An exponential-decay certificate (lam, big_m).

    Guarantee: the gap between any two solutions raised from histories within
    the analysis ball obeys

        gap(t) <= big_m * nexp_{circleminus lam}(t, t0) * gap_0,

    where gap_0 is the initial history norm (max over components and their
    nabla derivatives).  ``witness`` records why ``lam`` is maximal:
    inflating it by 1 % either drives some margin function nonpositive or
    leaves the admissible interval.
    """

    lam: float
    big_m: float
    nu_sup: float
    cap: float
    include_delayed_feedback: bool
    h_at_lambda: HValues
    witness: str

    def to_text(self) -> str:
        lines = [
            f"lambda = {self.lam:.12g}",
            f"M = {self.big_m:.12g}",
            f"nu_sup = {self.nu_sup:.12g}",
            f"cap = {self.cap:.12g}",
            f"include_delayed_feedback = {self.include_delayed_feedback}",
            f"witness = {self.witness}",
        ]
        hv = self.h_at_lambda
        for name, arr in (
            ("h", hv.h),
            ("h_bar", hv.h_bar),
            ("h_star", hv.h_star),
            ("h_bar_star", hv.h_bar_star),
        ):
            for i, v in enumerate(arr):
                lines.append(f"{name}.{i + 1} = {v:.12g}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse_lambda_m(text: str) -> tuple[float, float]:
        """Read back (lam, big_m) from :meth:`to_text` output."""
        lam = big_m = None
        for line in text.splitlines():
            if "=" not in line:
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            if key == "lambda":
                lam = float(value)
            elif key == "M":
                big_m = float(value)
        if lam is None or big_m is None:
            raise ConditionsError("certificate text lacks lambda or M")
        return lam, big_m


def find_lambda(
    b: BoundSet,
    L: Sequence[float],
    include_delayed_feedback: bool = True,
    positivity_margin: float = 1e-9,
    scan_points: int = 4096,
) -> Certificate:
    """Largest decay rate with all four margin families positive, plus M.

    The admissible interval is (0, cap) with
    ``cap = min(alpha_inf, c_inf)`` (shrunk below ``1/nu_sup`` on scales with
    positive graininess so the decay envelope stays positively regressive).
    A grid scan brackets the first sign change of the pointwise minimum of
    the margin functions; bisection then pins the boundary, and the returned
    ``lam`` keeps a positivity margin of at least ``positivity_margin``.

    Raises :class:`InfeasibleError` when the margin functions are not all
    positive at 0+ (equivalently: the contraction check fails).
    """
    _check_positive_decay(b)
    L = np.asarray(L, dtype=float)
    cap = b.decay_cap()
    if b.nu_sup > 0.0:
        cap = min(cap, (1.0 - 1e-9) / b.nu_sup)
    cap *= 1.0 - 1e-12

    def g(beta: float) -> float:
        return h_functions(b, L, beta, include_delayed_feedback).min_value()

    if g(0.0) <= 0.0:
        raise InfeasibleError(
            "margin functions are nonpositive at rate 0: the contraction "
            "check fails, no decay certificate exists"
        )

    betas = np.linspace(0.0, cap, scan_points)
    lo = 0.0
    hi = None
    for beta in betas[1:]:
        if g(float(beta)) - positivity_margin <= 0.0:
            hi = float(beta)
            break
        lo = float(beta)
    if hi is None:
        lam = cap
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if g(mid) - positivity_margin > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15:
                break
        lam = lo
    if lam <= 0.0:
        raise InfeasibleError(
            "no positive rate keeps the margin functions above the requested "
            "positivity margin"
        )

    inflated = lam * 1.01
    if inflated >= cap:
        witness = (
            f"maximal: lambda*1.01 = {inflated:.9g} leaves the admissible "
            f"interval (cap {cap:.9g})"
        )
    else:
        worst = g(inflated)
        if worst <= positivity_margin:
            witness = (
                f"maximal: lambda*1.01 = {inflated:.9g} drives the minimum "
                f"margin to {worst:.3g} <= {positivity_margin:g}"
            )
        else:
            witness = (
                f"non-witnessed: margin at lambda*1.01 is {worst:.3g} > 0 "
                "(scan resolution)"
            )

    Pbar, Qbar = compute_PQbar(b, L, include_delayed_feedback)
    big_m = float(max((b.alpha_inf / Pbar).max(), (b.c_inf / Qbar).max()))
    return Certificate(
        lam=float(lam),
        big_m=big_m,
        nu_sup=b.nu_sup,
        cap=float(cap),
        include_delayed_feedback=include_delayed_feedback,
        h_at_lambda=h_functions(b, L, float(lam), include_delayed_feedback),
        witness=witness,
    )
