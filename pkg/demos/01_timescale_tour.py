"""Tour of the nabla calculus layer on three kinds of time scale.

Shows, side by side on the integer lattice, a dense interval, and a union
of intervals with a gap:

* the backward jump and graininess,
* nabla derivatives (exact backward quotients at left-scattered points,
  limit derivatives inside dense stretches),
* nabla integrals (atom masses plus dense panels) and their additivity,
* the nabla exponential, checked against the closed forms it must match on
  purely discrete and purely continuous scales,
* positive regressivity as the admissibility boundary for exponentials.

Run:  python3 demos/01_timescale_tour.py
"""

import math

from chronoscale import TimeScale, circle_minus


def section(title):
    print()
    print(f"== {title}")


def main():
    lattice = TimeScale.integer_lattice()
    dense = TimeScale.real_interval(0.0, 8.0, step=0.01)
    union = TimeScale.union_of_intervals([(0.0, 1.0), (2.0, 3.0)], step=0.01)

    section("structure: backward jump and graininess")
    for name, ts, t in [("integer lattice", lattice, 5.0),
                        ("dense interval", dense, 5.0),
                        ("union, at the gap edge", union, 2.0)]:
        print(f"  {name:24s} rho({t:g}) = {ts.backward_jump(t):g}   "
              f"nu({t:g}) = {ts.graininess(t):g}")

    section("nabla derivative of t^2")
    # At a left-scattered point the derivative is the exact backward
    # quotient: (t^2 - rho(t)^2) / nu(t) = t + rho(t).
    sq = lambda u: u * u
    t = 5.0
    print(f"  lattice:   derivative at t=5 -> {lattice.nabla_derivative(sq, t):g} "
          f"(backward quotient t + rho(t) = {t + lattice.backward_jump(t):g})")
    print(f"  dense:     derivative at t=5 -> {dense.nabla_derivative(sq, t):.8f} "
          f"(limit value 2t = {2 * t:g})")
    print(f"  union gap: derivative at t=2 -> {union.nabla_derivative(sq, 2.0):g} "
          f"(quotient over the jump (4 - 1) / 1 = 3)")

    section("nabla integral and additivity over (a, b]")
    f = math.cos
    for name, ts, a, mid, b in [("lattice", lattice, 0.0, 3.0, 6.0),
                                ("dense", dense, 0.0, 3.0, 6.0),
                                ("union", union, 0.0, 2.0, 3.0)]:
        whole = ts.nabla_integral(f, a, b)
        split = ts.nabla_integral(f, a, mid) + ts.nabla_integral(f, mid, b)
        print(f"  {name:8s} integral({a:g},{b:g}] = {whole:.10f}   "
              f"split at {mid:g}: {split:.10f}   |diff| = {abs(whole - split):.2e}")

    section("nabla exponential vs. closed forms")
    a = 0.4
    t = 6.0
    # Integer lattice: each unit panel contributes a factor 1/(1 - a).
    got = lattice.nabla_exp(lambda u: a, t, 0.0)
    want = (1.0 - a) ** (-t)
    print(f"  lattice, constant rate {a}: nexp = {got:.10f}   "
          f"(1-a)^-t = {want:.10f}   rel err = {abs(got - want) / want:.2e}")
    # Dense interval: the nabla exponential collapses to the classical one.
    got = dense.nabla_exp(lambda u: a, t, 0.0)
    want = math.exp(a * t)
    print(f"  dense,   constant rate {a}: nexp = {got:.10f}   "
          f"exp(a t) = {want:.10f}   rel err = {abs(got - want) / want:.2e}")
    # Union: mixed product -- dense growth on the pieces, a jump factor at
    # the gap.  The reversal identity must hold across the gap.
    fwd = union.nabla_exp(lambda u: a, 3.0, 0.0)
    back = union.nabla_exp(lambda u: a, 0.0, 3.0)
    neg = union.nabla_exp(lambda u: circle_minus(a, union.graininess(u)), 0.0, 3.0)
    print(f"  union,   forward nexp(3,0) = {fwd:.10f}")
    print(f"           reversal product fwd * nexp(0,3) = {fwd * back:.12f} (want 1)")
    print(f"           graininess-circle negation route  = {fwd * (1.0 / neg):.12f}"
          f" (want 1)")

    section("positive regressivity: the admissibility boundary")
    for rate in (0.6, 0.99, 1.2):
        ok = lattice.is_positively_regressive(lambda u: rate, 0.0, 6.0)
        print(f"  lattice, rate {rate:4g}: 1 - nu*p = {1 - rate:5g}  ->  "
              f"{'admissible' if ok else 'NOT admissible'}")
    print("  (dense stretches have nu = 0, so every bounded rate is admissible"
          " there)")


if __name__ == "__main__":
    main()
