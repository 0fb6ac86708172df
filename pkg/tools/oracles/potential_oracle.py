"""Independent oracle for the conformal potential V = Omega^3 box(Omega^{-1}).

Three layers of evidence, mirroring the two evaluation paths the package
exposes (analytic cancellation and finite differences on the Bondi form of
the wave operator):

1.  sympy exact: box(1/r) == 0 and box(1/s^2) == 0 with
    box f = -f_tt + f_rr + (2/r) f_r  (radial 3+1 d'Alembertian, -+++),
    and the radial Bondi rewriting

        box f = dBr(dBr f) - 2 dBu(dBr f) + (2/r)(dBr f - dBu f),
        dBu = d/dt,  dBr = d/dt + d/dr,

    is verified to be the *same operator* on a generic smooth function.

2.  Analytic-piece cancellation in float64: each Bondi term of box(1/r) and
    box(1/s^2) is evaluated in closed form; the pieces are individually
    O(1/r^3)-sized and cancel to ~1e-16 relative.  This is the path behind
    the package's randomized potentials check, so the oracle records the
    worst relative residual over a deterministic point cloud.

3.  4th-order central finite differences in Bondi coordinates (u, r) with
    absolute step 1e-3 at the two spot points used by the tests; the
    magnitudes |V| are frozen (bound 1e-6, observed ~1e-9).

Writes potential_fixture.json.
"""

import json

import sympy as sp


# ---------------------------------------------------------------------------
# 1. exact symbolic layer
# ---------------------------------------------------------------------------
t, r = sp.symbols("t r", positive=True)


def box_tr(f):
    return -sp.diff(f, t, 2) + sp.diff(f, r, 2) + 2 * sp.diff(f, r) / r


def box_bondi_tr(f):
    """Radial Bondi wave operator applied to f(t, r)."""
    dBu = lambda g: sp.diff(g, t)
    dBr = lambda g: sp.diff(g, t) + sp.diff(g, r)
    return dBr(dBr(f)) - 2 * dBu(dBr(f)) + (2 / r) * (dBr(f) - dBu(f))


assert sp.simplify(box_tr(1 / r)) == 0
assert sp.simplify(box_tr(1 / (t * t - r * r))) == 0

g = sp.Function("g")(t, r)
assert sp.simplify(box_bondi_tr(g) - box_tr(g)) == 0
print("symbolic: box(1/r)=0, box(1/s^2)=0, Bondi form == Cartesian form")


# ---------------------------------------------------------------------------
# 2. analytic-piece cancellation in float64 (Bondi coordinates u, rr)
# ---------------------------------------------------------------------------
# For f(u, rr) (t = u + rr):  dBu  = d/du at fixed rr,  dBr = d/drr at fixed u.
# Pieces of box: P1 = dBr^2 f, P2 = -2 dBu dBr f, P3 = (2/r)(dBr f - dBu f).

def pieces_r_weight(u, rr):
    # f = 1/rr  (independent of u)
    p1 = 2.0 / rr**3
    p2 = 0.0
    p3 = (2.0 / rr) * (-1.0 / rr**2 - 0.0)
    return p1, p2, p3


def pieces_s2_weight(u, rr):
    # f = 1/(u*(u+2 rr)) = 1/s^2
    ub = u + 2.0 * rr
    f = 1.0 / (u * ub)
    fu = -(2.0 * u + 2.0 * rr) / (u * ub) ** 2          # d/du
    fr = -2.0 / (u * ub * ub)                           # d/drr
    frr = 8.0 / (u * ub**3)                             # d2/drr2
    fur = 2.0 * (3.0 * u + 2.0 * rr) / (u**2 * ub**3)   # d2/du drr
    p1 = frr
    p2 = -2.0 * fur
    p3 = (2.0 / rr) * (fr - fu)
    return p1, p2, p3, f, fu, fr, frr, fur


def rel_residual(pieces):
    s = sum(pieces)
    scale = max(abs(p) for p in pieces)
    return abs(s) / scale


worst_r = 0.0
worst_s2 = 0.0
pts = [(0.1 + 0.37 * i, 0.05 + 0.61 * j) for i in range(25) for j in range(25)]
for (u, rr) in pts:
    worst_r = max(worst_r, rel_residual(pieces_r_weight(u, rr)))
    worst_s2 = max(worst_s2, rel_residual(pieces_s2_weight(u, rr)[:3]))
print(f"analytic cancellation: worst rel residual  r-weight {worst_r:.3e}  "
      f"s2-weight {worst_s2:.3e}")
assert worst_r < 1e-13 and worst_s2 < 1e-13


# verify the closed-form s^2 partials against sympy before trusting them
u_s, rr_s = sp.symbols("u rr", positive=True)
f_s = 1 / (u_s * (u_s + 2 * rr_s))
for expr, idx in [
    (sp.diff(f_s, u_s), 1),
    (sp.diff(f_s, rr_s), 2),
    (sp.diff(f_s, rr_s, 2), 3),
    (sp.diff(f_s, u_s, rr_s), 4),
]:
    got = pieces_s2_weight(1.3, 0.8)[3 + idx]
    want = float(expr.subs({u_s: sp.Rational(13, 10), rr_s: sp.Rational(4, 5)}))
    assert abs(got - want) <= 1e-15 * abs(want), (idx, got, want)


# ---------------------------------------------------------------------------
# 3. finite-difference path, 4th-order, absolute step 1e-3
# ---------------------------------------------------------------------------
H = 1e-3


def d1(fn, x, h):
    return (fn(x - 2 * h) - 8 * fn(x - h) + 8 * fn(x + h) - fn(x + 2 * h)) / (12 * h)


def d2(fn, x, h):
    return (
        -fn(x - 2 * h) + 16 * fn(x - h) - 30 * fn(x) + 16 * fn(x + h) - fn(x + 2 * h)
    ) / (12 * h * h)


def box_bondi_fd(f, u, rr, h=H):
    # f(u, rr); dBu^a dBr^b composed from 1-d stencils
    fb_rr = d2(lambda x: f(u, x), rr, h)
    fb_ur = d1(lambda y: d1(lambda x: f(y, x), rr, h), u, h)
    fb_r = d1(lambda x: f(u, x), rr, h)
    fb_u = d1(lambda y: f(y, rr), u, h)
    return fb_rr - 2.0 * fb_ur + (2.0 / rr) * (fb_r - fb_u)


spots = {}
for (u, rr) in [(1.7, 0.9), (3.2, 2.5)]:
    om_r = rr
    om_s2 = u * (u + 2 * rr)
    v_r = om_r**3 * box_bondi_fd(lambda uu, x: 1.0 / x, u, rr)
    v_s2 = om_s2**3 * box_bondi_fd(lambda uu, x: 1.0 / (uu * (uu + 2 * x)), u, rr)
    print(f"FD spot (u={u}, r={rr}):  |V_r| = {abs(v_r):.3e}   |V_s2| = {abs(v_s2):.3e}")
    assert abs(v_r) <= 1e-6 and abs(v_s2) <= 1e-6
    spots[f"u{u}_r{rr}"] = {"V_r_abs": abs(v_r), "V_s2_abs": abs(v_s2)}

out = {
    "symbolic_zero": True,
    "analytic_cancellation_worst_rel": {"r": worst_r, "s2": worst_s2},
    "fd_step": H,
    "fd_spots": spots,
    "fd_bound": 1e-6,
}
with open("potential_fixture.json", "w") as fh:
    json.dump(out, fh, indent=1)
print("wrote potential_fixture.json")
