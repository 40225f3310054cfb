"""Solvability checks and decay certificates against frozen oracle values.

The expected numbers for the two-neuron benchmark were computed by hand from
the override bound table (plain interval arithmetic on the column sums) and
frozen here; the library must reproduce them exactly.
"""

import math

import numpy as np
import pytest

from chronoscale import benchmark
from chronoscale.coeffs import Add, BoundPair, Const, Scale, Sin, TimeVar
from chronoscale.conditions import (
    DEFAULT_R_GRID,
    Certificate,
    ConditionsError,
    InfeasibleError,
    check_H3,
    compute_bounds,
    find_lambda,
    h_functions,
    search_r,
)
from chronoscale.network import ACTIVATIONS, NetworkSpec
from chronoscale.timescale import TimeScale

L = (1.0, 1.0)
F0 = (0.0, 0.0)

# hand arithmetic on the override table (B_sup = 1/(pi e^{2pi})):
B_SUP = 1.0 / (math.pi * math.exp(2.0 * math.pi))
# leak 0.9*0.06 + instant+distributed+neutral column sums + coupling
PBAR1_RED = 0.9 * 0.06 + (0.05 + 0.05 * 0.08 + 0.05 * 0.06) \
    + (0.05 + 0.05 * 0.07 + 0.05 * 0.05) + B_SUP
PBAR2_RED = 0.8 * 0.05 + (0.05 + 0.05 * 0.04 + 0.05 * 0.02) \
    + (0.05 + 0.05 * 0.02 + 0.05 * 0.03) + B_SUP
QBAR1 = 0.29 * 0.04 + 0.21
QBAR2 = 0.28 * 0.05 + 0.21


@pytest.fixture(scope="module")
def bench_bounds():
    return compute_bounds(benchmark.two_neuron_spec())


@pytest.fixture(scope="module")
def bench_report(bench_bounds):
    return check_H3(bench_bounds, L, F0, 0.45, include_delayed_feedback=False)


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def test_overrides_land_in_boundset(bench_bounds):
    b = bench_bounds
    assert b.alpha_sup == pytest.approx([0.9, 0.8], abs=0)
    assert b.alpha_inf == pytest.approx([0.89, 0.78], abs=0)
    assert b.c_inf == pytest.approx([0.28, 0.27], abs=0)
    assert b.B_sup == pytest.approx([B_SUP, B_SUP], rel=1e-12)
    assert np.all(b.D_sup == 0.05) and np.all(b.Dtau_sup == 0.05)
    assert b.sigma_sup == pytest.approx(np.array([[0.08, 0.07], [0.04, 0.02]]), abs=0)
    assert b.zeta_sup == pytest.approx(np.array([[0.06, 0.05], [0.02, 0.03]]), abs=0)
    assert b.sources["alpha.1"] == "override"
    assert b.decay_cap() == pytest.approx(0.27, abs=0)
    assert b.theta() == pytest.approx(0.08, abs=0)


def test_summary_lines_tag_provenance(bench_bounds):
    text = "\n".join(bench_bounds.summary_lines())
    assert "alpha.1" in text and "[override]" in text
    assert "graininess sup" in text


def test_sampled_bounds_approximate_envelopes():
    t = TimeVar()
    z = Const(0.0)
    spec = NetworkSpec(
        n=1,
        alpha=(Add(Const(0.5), Scale(0.1, Sin(t))),),
        c=(Const(0.4),),
        D=((Scale(0.2, Sin(t)),),), Dtau=((z,),), Dbar=((z,),), Dtil=((z,),),
        B=(z,), E=(z,), I=(z,), J=(z,),
        eta=(z,), varsigma=(z,),
        tau=((z,),), sigma_d=((z,),), zeta=((z,),),
        activations=(ACTIVATIONS["identity"],),
    )
    b = compute_bounds(spec)
    assert b.alpha_sup[0] == pytest.approx(0.6, abs=1e-3)
    assert b.alpha_inf[0] == pytest.approx(0.4, abs=1e-3)
    assert b.D_sup[0, 0] == pytest.approx(0.2, abs=1e-3)
    assert b.sources["alpha.1"] == "sampled"


def test_nu_sup_reflects_the_time_scale():
    spec = benchmark.two_neuron_spec()
    assert compute_bounds(spec).nu_sup == 0.0
    assert compute_bounds(spec, TimeScale.integer_lattice()).nu_sup == pytest.approx(1.0)
    dense = compute_bounds(spec, TimeScale.real_interval(-2.0, 60.0, 0.01))
    assert dense.nu_sup == pytest.approx(0.0, abs=1e-12)
    union = compute_bounds(
        spec, TimeScale.union_of_intervals([(0.0, 1.0), (2.0, 3.0)], step=0.01))
    assert union.nu_sup == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# solvability report at r = 0.45
# ---------------------------------------------------------------------------


def test_benchmark_column_sums(bench_report):
    rep = bench_report
    assert rep.Pbar == pytest.approx([PBAR1_RED, PBAR2_RED], rel=1e-12)
    assert rep.Qbar == pytest.approx([QBAR1, QBAR2], rel=1e-12)
    # with f(0)=0 and unit Lipschitz: P = r*(Pbar + delayed column) + I_sup
    assert rep.P[0] == pytest.approx(0.45 * (PBAR1_RED + 0.1) + 0.08, rel=1e-12)
    assert rep.P[1] == pytest.approx(0.45 * (PBAR2_RED + 0.1) + 0.10, rel=1e-12)
    assert rep.Q[0] == pytest.approx(0.45 * QBAR1 + 0.01, rel=1e-12)
    assert rep.Q[1] == pytest.approx(0.45 * QBAR2 + 0.02, rel=1e-12)


def test_benchmark_invariance_and_contraction(bench_report):
    rep = bench_report
    assert rep.max_r_expr == pytest.approx(0.447407, abs=5e-7)
    assert rep.kappa == pytest.approx(0.829630, abs=5e-7)
    assert rep.max_r_expr <= 0.45
    assert rep.kappa < 1.0
    assert rep.feasible


def test_benchmark_ratio_tables(bench_report):
    rep = bench_report
    amp_a = [1.0 + 0.9 / 0.89, 1.0 + 0.8 / 0.78]
    amp_c = [1.0 + 0.29 / 0.28, 1.0 + 0.28 / 0.27]
    want_r = [
        rep.P[0] / 0.89, amp_a[0] * rep.P[0],
        rep.P[1] / 0.78, amp_a[1] * rep.P[1],
        rep.Q[0] / 0.28, rep.Q[1] / 0.27,
        amp_c[0] * rep.Q[0], amp_c[1] * rep.Q[1],
    ]
    assert rep.r_ratios == pytest.approx(want_r, rel=1e-12)
    want_k = [
        rep.Pbar[0] / 0.89, rep.Pbar[1] / 0.78,
        amp_a[0] * rep.Pbar[0], amp_a[1] * rep.Pbar[1],
        rep.Qbar[0] / 0.28, rep.Qbar[1] / 0.27,
        amp_c[0] * rep.Qbar[0], amp_c[1] * rep.Qbar[1],
    ]
    assert rep.kappa_ratios == pytest.approx(want_k, rel=1e-12)
    assert rep.max_r_expr == pytest.approx(max(want_r), rel=1e-12)
    assert rep.kappa == pytest.approx(max(want_k), rel=1e-12)


def test_delayed_feedback_variant_changes_only_Pbar(bench_bounds, bench_report):
    full = check_H3(bench_bounds, L, F0, 0.45, include_delayed_feedback=True)
    assert full.Pbar == pytest.approx(np.asarray(bench_report.Pbar) + 0.1, rel=1e-12)
    assert full.Qbar == pytest.approx(bench_report.Qbar, rel=0, abs=0)
    assert full.P == pytest.approx(bench_report.P, rel=0, abs=0)
    assert full.Q == pytest.approx(bench_report.Q, rel=0, abs=0)
    assert full.feasible  # kappa is driven by the long-term column here


def test_radius_search(bench_bounds):
    assert search_r(bench_bounds, L, F0, include_delayed_feedback=False) == pytest.approx(0.45)
    assert not check_H3(bench_bounds, L, F0, 0.40, include_delayed_feedback=False).feasible
    assert search_r(bench_bounds, L, F0, r_grid=[0.40],
                    include_delayed_feedback=False) is None


def test_default_radius_grid_shape():
    assert DEFAULT_R_GRID[0] == pytest.approx(0.10)
    assert DEFAULT_R_GRID[-1] == pytest.approx(1.0)
    assert np.allclose(np.diff(DEFAULT_R_GRID), 0.05)


def test_doubled_weights_are_infeasible_on_default_grid(bench_bounds):
    spec = benchmark.two_neuron_spec()
    overrides = dict(spec.bound_overrides)
    for key, pair in list(overrides.items()):
        family = key.split(".")[0]
        if family in ("D", "Dtau", "Dbar", "Dtil", "B", "E"):
            overrides[key] = BoundPair(2.0 * pair.sup_abs, pair.inf_abs, "override")
    import dataclasses
    doubled = dataclasses.replace(spec, bound_overrides=overrides)
    b = compute_bounds(doubled)
    assert search_r(b, L, F0, include_delayed_feedback=False) is None


# ---------------------------------------------------------------------------
# margin functions and the certificate
# ---------------------------------------------------------------------------


def test_margin_functions_at_zero_equal_contraction_deficits(bench_bounds):
    hv = h_functions(bench_bounds, L, 0.0, include_delayed_feedback=False)
    # at rate 0 the long-term margins reduce to c_inf - Qbar
    assert hv.h_bar == pytest.approx([0.28 - QBAR1, 0.27 - QBAR2], rel=1e-9)
    assert hv.all_positive()
    assert hv.min_value() > 0


def test_certificate_frozen_values_lattice(bench_bounds):
    import dataclasses
    b = dataclasses.replace(bench_bounds, nu_sup=1.0)
    cert = find_lambda(b, L, include_delayed_feedback=False)
    assert cert.lam == pytest.approx(0.045317725, abs=1e-6)
    assert cert.big_m == pytest.approx(0.78 / PBAR2_RED, rel=1e-9)
    assert cert.big_m == pytest.approx(5.339013, abs=1e-5)
    assert cert.big_m > 1.0
    assert cert.lam > 0.0
    assert cert.h_at_lambda.all_positive()
    assert cert.witness  # non-empty maximality explanation
    assert cert.nu_sup == 1.0
    assert cert.lam < cert.cap == pytest.approx(0.27)


def test_certificate_frozen_values_dense(bench_bounds):
    cert = find_lambda(bench_bounds, L, include_delayed_feedback=False)
    assert cert.lam == pytest.approx(0.045967785, abs=1e-6)
    assert cert.big_m == pytest.approx(5.339013, abs=1e-5)


def test_dense_rate_dominates_lattice_rate(bench_bounds):
    import dataclasses
    lam_dense = find_lambda(bench_bounds, L, include_delayed_feedback=False).lam
    lam_lattice = find_lambda(dataclasses.replace(bench_bounds, nu_sup=1.0), L,
                              include_delayed_feedback=False).lam
    assert lam_dense >= lam_lattice


def test_rate_is_variant_independent_M_is_not(bench_bounds):
    red = find_lambda(bench_bounds, L, include_delayed_feedback=False)
    full = find_lambda(bench_bounds, L, include_delayed_feedback=True)
    # the binding margin family contains no weight terms, so the rate agrees
    assert full.lam == pytest.approx(red.lam, abs=1e-9)
    assert full.big_m == pytest.approx(3.325929, abs=1e-5)
    assert full.big_m < red.big_m


def test_infeasible_bounds_raise(bench_bounds):
    spec = benchmark.two_neuron_spec()
    overrides = dict(spec.bound_overrides)
    overrides["E.1"] = BoundPair(0.63, 0.0, "override")  # Qbar_1 > c_1^-
    import dataclasses
    bad = dataclasses.replace(spec, bound_overrides=overrides)
    with pytest.raises(InfeasibleError):
        find_lambda(compute_bounds(bad), L, include_delayed_feedback=False)


def test_certificate_text_round_trip(bench_bounds):
    cert = find_lambda(bench_bounds, L, include_delayed_feedback=False)
    text = cert.to_text()
    lam, big_m = Certificate.parse_lambda_m(text)
    assert lam == pytest.approx(cert.lam, rel=1e-10)
    assert big_m == pytest.approx(cert.big_m, rel=1e-10)
    with pytest.raises(ConditionsError):
        Certificate.parse_lambda_m("no useful keys here\n")
