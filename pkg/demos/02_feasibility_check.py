"""Solvability check for the bundled two-neuron reference model.

Walks through the two-part contraction argument the library automates:

1. collect coefficient envelopes (sup/inf bounds) for the model,
2. at a candidate ball radius r, check that the invariance ratios stay
   below r and the contraction ratios stay below 1,
3. search a radius grid for the smallest feasible r,
4. show how the check fails when the coupling weights are doubled.

Run:  python3 demos/02_feasibility_check.py
"""

import numpy as np

from chronoscale import check_H3, compute_bounds, search_r
from chronoscale.benchmark import two_neuron_spec

LIP = (1.0, 1.0)      # activation Lipschitz constants
F_AT_ZERO = (0.0, 0.0)  # activation values at the origin


def section(title):
    print()
    print(f"== {title}")


def main():
    spec = two_neuron_spec()

    section("coefficient envelopes")
    bounds = compute_bounds(spec)
    lines = bounds.summary_lines()
    for line in lines[:8]:
        print(line)
    print(f"  ... ({len(lines) - 9} more coefficient rows)")
    print(lines[-1])
    print(f"  delay reach theta = {bounds.theta():g}")
    print(f"  decay cap min(alpha_inf, c_inf) = {bounds.decay_cap():g}")

    section("two-part check at radius r = 0.45")
    report = check_H3(bounds, LIP, F_AT_ZERO, r=0.45,
                      include_delayed_feedback=False)
    for line in report.summary_lines():
        print(line)

    section("smallest feasible radius on a grid")
    grid = np.round(np.arange(0.10, 1.0 + 1e-9, 0.05), 10)
    best = search_r(bounds, LIP, F_AT_ZERO, r_grid=grid,
                    include_delayed_feedback=False)
    print(f"  grid 0.10, 0.15, ..., 1.00  ->  smallest feasible r = {best}")

    section("a failing configuration: coupling weights doubled")
    doubled = dict(bounds.__dict__)
    for key in ("D_sup", "Dtau_sup", "Dbar_sup", "Dtil_sup", "B_sup", "E_sup"):
        doubled[key] = 2.0 * doubled[key]
    stressed = type(bounds)(**doubled)
    bad = check_H3(stressed, LIP, F_AT_ZERO, r=0.45,
                   include_delayed_feedback=False)
    print(f"  kappa = {bad.kappa:.4f} (needs < 1)   "
          f"max invariance expression = {bad.max_r_expr:.4f} (needs <= 0.45)")
    print(f"  feasible: {'yes' if bad.feasible else 'no'}")


if __name__ == "__main__":
    main()
