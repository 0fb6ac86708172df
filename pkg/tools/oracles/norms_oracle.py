"""Extended-precision oracle for slice norms, equivalence constants, sups.

Over a small suite of closed-form radial fields (with exact partials), this
computes on hyperboloids t = sqrt(s^2 + r^2):

  * every norm kind at selected (s, a) pairs (for regression fixtures);
  * the suite-wide norm-equivalence ratios EW/E1a, EW/E2a and the combining
    ratio EWa/(E1a+E2a+EW), whose observed suprema (x1.05 headroom) are
    frozen as the calibrated constants used in the package's property tests;
  * for the traveling spherical bump at s=5, a=1/2: the full frozen norm set
    plus the weighted sup trackers.

All L2 integrands are assembled as 4*pi*(r*expr)^2 so that 1/r-weighted
members never divide by a vanishing radius.

Writes norms_fixture.json.
"""

import json

import sympy as sp
from mpmath import mp, mpf, sqrt, quad, exp

mp.dps = 25

T, R = sp.symbols("t r", positive=True)


def lambdify(expr):
    return sp.lambdify((T, R), expr, modules="mpmath")


def field_from_expr(expr):
    return {
        "phi": lambdify(expr),
        "phi_t": lambdify(sp.diff(expr, T)),
        "phi_r": lambdify(sp.diff(expr, R)),
    }


# ---------------------------------------------------------------------------
# the suite
# ---------------------------------------------------------------------------
def bump(x):
    if x <= 2 or x >= 3:
        return mpf(0)
    return exp(-1 / ((x - 2) * (3 - x)))


def bump_d(x):
    if x <= 2 or x >= 3:
        return mpf(0)
    # g = (x-2)(3-x), g' = 5-2x, (e^{-1/g})' = e^{-1/g} g'/g^2
    return bump(x) * (5 - 2 * x) / ((x - 2) * (3 - x)) ** 2


def swb_parts(t, r):
    phi = (bump(t - r) - bump(t + r)) / r
    phi_t = (bump_d(t - r) - bump_d(t + r)) / r
    phi_r = (-bump_d(t - r) - bump_d(t + r)) / r - phi / r
    return phi, phi_t, phi_r


def swb_rphi_parts(t, r):
    """(r*phi, r*phi_t, r*phi_r + phi*... ) -- exact products with r."""
    rphi = bump(t - r) - bump(t + r)
    rphi_t = bump_d(t - r) - bump_d(t + r)
    # r*phi_r = -bump'(t-r) - bump'(t+r) - phi
    return rphi, rphi_t


STATIC_SIN = sp.sin(sp.Rational(7, 10) * T + sp.Rational(3, 10)) * (
    1 - (R / sp.Rational(6, 5)) ** 2
) ** 8
KG_EXP = sp.exp(-T) * (1 - (R / sp.Rational(6, 5)) ** 2) ** 8
POLY_FORCED = (T**2 - R**2) * (1 - (R / sp.Rational(12, 5)) ** 2) ** 8

SUITE = {
    "static_sin": {"fns": field_from_expr(STATIC_SIN), "rsup": mpf(6) / 5,
                   "slices": [mpf(2), mpf(3)]},
    "kg_exp": {"fns": field_from_expr(KG_EXP), "rsup": mpf(6) / 5,
               "slices": [mpf(2), mpf(3)]},
    "poly_forced": {"fns": field_from_expr(POLY_FORCED), "rsup": mpf(12) / 5,
                    "slices": [mpf(4), mpf(5)]},
}


def parts_of(name, t, r):
    if name == "swb":
        return swb_parts(t, r)
    fns = SUITE[name]["fns"]
    if r >= SUITE[name]["rsup"]:
        return mpf(0), mpf(0), mpf(0)
    return fns["phi"](t, r), fns["phi_t"](t, r), fns["phi_r"](t, r)


def r_interval(name, s):
    if name == "swb":
        # support u = t-r in (2,3) on the slice: r = (s^2/u - u)/2
        lo = max(mpf(0), (s * s / 3 - 3) / 2)
        hi = (s * s / 2 - 2) / 2
    else:
        lo, hi = mpf(0), SUITE[name]["rsup"]
    cut = (s * s - 1) / 2
    return lo, min(hi, cut)


# ---------------------------------------------------------------------------
# norms (radial closed reductions; all integrands as 4 pi (r*expr)^2)
# ---------------------------------------------------------------------------
def tau_p(x):
    return sqrt(1 + x * x)


def norms(name, s, a, c=mpf(1)):
    lo, hi = r_interval(name, s)

    def L2sq(rexpr):
        return quad(lambda r: 4 * mp.pi * rexpr(r) ** 2,
                    [lo, hi], method="gauss-legendre", maxdegree=8)

    def geom(r):
        t = sqrt(s * s + r * r)
        u, ub = t - r, t + r
        return t, u, ub, s / t

    def P(r):
        t = geom(r)[0]
        return parts_of(name, t, r)

    def w1(u, ub):
        t0 = tau_p(u) / tau_p(ub)
        return 1 + a * tau_p(ub) ** a * t0 ** max(a, mpf(1) / 2)

    # plain pieces
    ew1 = L2sq(lambda r: r * geom(r)[3] * P(r)[1])
    ew2 = L2sq(lambda r: r * (P(r)[2] + (r / geom(r)[0]) * P(r)[1]))
    mass = L2sq(lambda r: r * P(r)[0])
    EW = sqrt(ew1 + ew2)
    EKG = sqrt(ew1 + ew2 + c * c * mass)

    EWa = sqrt(
        L2sq(lambda r: r * w1(geom(r)[1], geom(r)[2]) * geom(r)[3] * P(r)[1])
        + L2sq(lambda r: r * s ** a * (P(r)[2] + (r / geom(r)[0]) * P(r)[1]))
        + a * a * L2sq(lambda r: r * s ** a / geom(r)[0] * P(r)[0])
    )

    E1a = sqrt(
        L2sq(lambda r: r * w1(geom(r)[1], geom(r)[2]) * geom(r)[3] * P(r)[1])
        + L2sq(lambda r: tau_p(geom(r)[2]) ** a
               * (r * (P(r)[1] + P(r)[2]) + P(r)[0]))
    )

    def e2u(r):
        t = geom(r)[0]
        p, pt, _ = P(r)
        return pt + 2 * t * p / (s * s)

    def e2r_times_r(r):
        _, _, ub, _ = geom(r)
        p, pt, pr = P(r)
        return r * (pt + pr) + 2 * r * p / ub

    E2a = sqrt(
        L2sq(lambda r: r * (1 + s ** (a - 1) * tau_p(geom(r)[1]))
             * geom(r)[3] * e2u(r))
        + L2sq(lambda r: s ** (a - 1) * tau_p(geom(r)[2]) * e2r_times_r(r))
    )

    SuTau = sqrt(L2sq(lambda r: r * s ** a / tau_p(geom(r)[2]) * P(r)[0]))
    hardy_num = sqrt(L2sq(lambda r: P(r)[0]))
    hardy_den = sqrt(mpf(3)) * sqrt(ew2)
    hardy = hardy_num / hardy_den if hardy_den > 0 else mpf(0)
    return {"EW": EW, "EKG": EKG, "EWa": EWa, "E1a": E1a, "E2a": E2a,
            "SuTau": SuTau, "hardy_ratio": hardy}


def sups(name, s, a):
    lo, hi = r_interval(name, s)

    def weighted(kind, r):
        t = sqrt(s * s + r * r)
        ub = t + r
        p = abs(parts_of(name, t, r)[0])
        if kind == "tau_half":
            return tau_p(ub) ** mpf("0.5") * p
        if kind == "tau_threehalf":
            return tau_p(ub) ** mpf("1.5") * p
        return s ** a * tau_p(ub) ** mpf("0.5") * p

    out = {}
    n = 4000
    for kind in ("tau_half", "tau_threehalf", "s_a_tau_half"):
        vals = []
        for i in range(n + 1):
            r = lo + (hi - lo) * mpf(i) / n
            vals.append((weighted(kind, r), r))
        best, rb = max(vals)
        # golden-ish local refinement
        span = (hi - lo) / n
        for _ in range(60):
            for cand in (rb - span / 3, rb + span / 3):
                if lo < cand < hi:
                    v = weighted(kind, cand)
                    if v > best:
                        best, rb = v, cand
            span *= mpf(2) / 3
        out[kind] = float(best)
    return out


# ---------------------------------------------------------------------------
# run the suite
# ---------------------------------------------------------------------------
combos = []
for name in ("swb", "static_sin", "kg_exp", "poly_forced"):
    slices = [mpf(3), mpf(5), mpf(10)] if name == "swb" else SUITE[name]["slices"]
    for s in slices:
        for a in (mpf(0), mpf(1) / 2, mpf(1)):
            combos.append((name, s, a))

records = []
sup_IA = sup_IIA = sup_comb = mpf(0)
sup_band = mpf(1)
for (name, s, a) in combos:
    n = norms(name, s, a)
    r_IA = n["EW"] / n["E1a"]
    r_IIA = n["EW"] / n["E2a"]
    r_comb = n["EWa"] / (n["E1a"] + n["E2a"] + n["EW"])
    sup_IA = max(sup_IA, r_IA)
    sup_IIA = max(sup_IIA, r_IIA)
    sup_comb = max(sup_comb, r_comb)
    if a == 0:
        sup_band = max(sup_band, r_IA, 1 / r_IA)
    records.append(
        {"field": name, "s": float(s), "a": float(a)}
        | {k: float(v) for k, v in n.items()}
        | {"EW_over_E1a": float(r_IA), "EW_over_E2a": float(r_IIA),
           "EWa_over_sum": float(r_comb)}
    )
    assert n["EW"] <= n["EWa"] * (1 + mpf(10) ** -20), (name, s, a)
    print(f"{name:12s} s={float(s):4g} a={float(a):4g}  EW={float(n['EW']):.6g} "
          f"E1a={float(n['E1a']):.6g} E2a={float(n['E2a']):.6g} "
          f"EWa={float(n['EWa']):.6g}")

swb5 = norms("swb", mpf(5), mpf(1) / 2)
swb5_sups = sups("swb", mpf(5), mpf(1) / 2)
print("swb s=5 a=1/2:", {k: float(v) for k, v in swb5.items()})
print("swb s=5 sups:", swb5_sups)

out = {
    "suite": records,
    "calibrated": {
        "C_EW_over_E1a": float(sup_IA * mpf("1.05")),
        "C_EW_over_E2a": float(sup_IIA * mpf("1.05")),
        "C_combining": float(sup_comb * mpf("1.05")),
        "C_band_a0": float(sup_band * mpf("1.05")),
        "observed": {
            "EW_over_E1a": float(sup_IA),
            "EW_over_E2a": float(sup_IIA),
            "combining": float(sup_comb),
            "band_a0": float(sup_band),
        },
    },
    "swb_s5_ahalf": {k: float(v) for k, v in swb5.items()},
    "swb_s5_ahalf_sups": swb5_sups,
}
with open("norms_fixture.json", "w") as fh:
    json.dump(out, fh, indent=1)
print("wrote norms_fixture.json")
