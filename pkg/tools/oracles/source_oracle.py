"""Independent oracle for the manufactured solutions and their forcings.

Conventions frozen here (and consumed by the solver tests):

  wave:          u_tt = lap u + forcing         (so forcing = -box u, box = -d_tt + lap)
  Klein-Gordon:  v_tt = lap v - c^2 v + forcing (so forcing = -box v + c^2 v)

with lap the radial 3-d Laplacian  f_rr + (2/r) f_r.

Cases:
  spherical_wave_bump        psi = f(t-r) - f(t+r), phi = psi/r, f an exp bump
                             on (2,3); forcing == 0 (exact homogeneous solution,
                             proved symbolically for *generic* f).
  kg_modulated_bump          v = e^{-t} chi(r), chi = (1-(r/rho)^2)^8, rho=6/5;
                             forcing = e^{-t}[(1+c^2) chi - chi'' - (2/r) chi'].
  wave_with_polynomial_source  phi = (t^2-r^2) chi(r), chi as above with rho=12/5;
                             forcing = 8 chi + 4 r chi' - (t^2-r^2)(chi'' + (2/r)chi').

The closed forms above are verified against sympy differentiation exactly,
then sample values are frozen in float64 for regression tests.

Writes source_fixture.json.
"""

import json

import sympy as sp
from sympy import Rational as Q


t, r = sp.symbols("t r", positive=True)


def lap(f):
    return sp.diff(f, r, 2) + 2 * sp.diff(f, r) / r


def box(f):
    return -sp.diff(f, t, 2) + lap(f)


# ---------------------------------------------------------------------------
# spherical_wave_bump: homogeneous for generic profile f
# ---------------------------------------------------------------------------
f = sp.Function("f")
phi_generic = (f(t - r) - f(t + r)) / r
assert sp.simplify(box(phi_generic)) == 0
print("spherical wave: box[(f(t-r)-f(t+r))/r] == 0 for generic f")

# concrete profile: C-infinity bump supported on (2,3)
x = sp.symbols("x")
bump = sp.exp(-1 / ((x - 2) * (3 - x)))  # valid only on 2 < x < 3


def fval(arg):
    """float64 bump value with exact-zero outside (2,3)."""
    a = float(arg)
    if a <= 2.0 or a >= 3.0:
        return 0.0
    return float(bump.subs(x, sp.Float(a, 30)))


def fder(arg, n=1):
    a = float(arg)
    if a <= 2.0 or a >= 3.0:
        return 0.0
    return float(sp.diff(bump, x, n).subs(x, sp.Float(a, 30)))


def swb_phi(tv, rv):
    return (fval(tv - rv) - fval(tv + rv)) / rv


def swb_phi_t(tv, rv):
    return (fder(tv - rv) - fder(tv + rv)) / rv


def swb_phi_r(tv, rv):
    return (-fder(tv - rv) - fder(tv + rv)) / rv - swb_phi(tv, rv) / rv


swb_samples = []
for (tv, rv) in [(4.0, 1.5), (4.7, 0.25), (10.0, 7.3), (5.0, 2.8)]:
    swb_samples.append(
        {
            "t": tv,
            "r": rv,
            "phi": swb_phi(tv, rv),
            "phi_t": swb_phi_t(tv, rv),
            "phi_r": swb_phi_r(tv, rv),
        }
    )
    print(f"  swb ({tv},{rv}): phi={swb_samples[-1]['phi']:.17g}")

# ---------------------------------------------------------------------------
# kg_modulated_bump
# ---------------------------------------------------------------------------
rho_kg = Q(6, 5)
chi_kg = (1 - (r / rho_kg) ** 2) ** 8
c = sp.symbols("c", positive=True)
v_exact = sp.exp(-t) * chi_kg
forcing_kg_sympy = sp.diff(v_exact, t, 2) - lap(v_exact) + c**2 * v_exact
forcing_kg_closed = sp.exp(-t) * (
    (1 + c**2) * chi_kg - sp.diff(chi_kg, r, 2) - 2 * sp.diff(chi_kg, r) / r
)
assert sp.simplify(forcing_kg_sympy - forcing_kg_closed) == 0
print("kg_modulated_bump: closed-form forcing == sympy forcing")

kg_fn = sp.lambdify((t, r, c), v_exact, "math")
kg_ft = sp.lambdify((t, r, c), sp.diff(v_exact, t), "math")
kg_src = sp.lambdify((t, r, c), forcing_kg_closed, "math")
kg_samples = []
for (tv, rv, cv) in [(2.5, 0.5, 1.0), (3.1, 0.9, 1.0), (2.3, 0.05, 1.0)]:
    kg_samples.append(
        {
            "t": tv,
            "r": rv,
            "c": cv,
            "v": kg_fn(tv, rv, cv),
            "v_t": kg_ft(tv, rv, cv),
            "forcing": kg_src(tv, rv, cv),
        }
    )
    print(f"  kg ({tv},{rv}): v={kg_samples[-1]['v']:.17g} "
          f"forcing={kg_samples[-1]['forcing']:.17g}")

# ---------------------------------------------------------------------------
# wave_with_polynomial_source
# ---------------------------------------------------------------------------
rho_w = Q(12, 5)
chi_w = (1 - (r / rho_w) ** 2) ** 8
phi_w = (t**2 - r**2) * chi_w
forcing_w_sympy = sp.diff(phi_w, t, 2) - lap(phi_w)
forcing_w_closed = (
    8 * chi_w
    + 4 * r * sp.diff(chi_w, r)
    - (t**2 - r**2) * (sp.diff(chi_w, r, 2) + 2 * sp.diff(chi_w, r) / r)
)
assert sp.simplify(forcing_w_sympy - forcing_w_closed) == 0
print("wave_with_polynomial_source: closed-form forcing == sympy forcing")
# sanity: with chi == 1 the forcing is the constant 8
assert sp.simplify(sp.diff((t**2 - r**2), t, 2) - lap(t**2 - r**2)) == 8

w_fn = sp.lambdify((t, r), phi_w, "math")
w_ft = sp.lambdify((t, r), sp.diff(phi_w, t), "math")
w_src = sp.lambdify((t, r), forcing_w_closed, "math")
w_samples = []
for (tv, rv) in [(4.0, 1.1), (3.5, 2.0), (5.5, 0.3)]:
    w_samples.append(
        {"t": tv, "r": rv, "phi": w_fn(tv, rv), "phi_t": w_ft(tv, rv),
         "forcing": w_src(tv, rv)}
    )
    print(f"  poly ({tv},{rv}): phi={w_samples[-1]['phi']:.17g} "
          f"forcing={w_samples[-1]['forcing']:.17g}")

out = {
    "conventions": {
        "wave": "u_tt = lap u + forcing",
        "klein_gordon": "v_tt = lap v - c^2 v + forcing",
        "box_phi_equals": "-forcing (wave); c^2 v - forcing (KG)",
    },
    "spherical_wave_bump": {"profile_support": [2.0, 3.0], "samples": swb_samples},
    "kg_modulated_bump": {"rho": float(rho_kg), "samples": kg_samples},
    "wave_with_polynomial_source": {"rho": float(rho_w), "samples": w_samples},
}
with open("source_fixture.json", "w") as fh:
    json.dump(out, fh, indent=1)
print("wrote source_fixture.json")
