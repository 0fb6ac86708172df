"""Independent oracle for the deformation-tensor coefficient formulas.

Checks, at high precision and independently of the package implementation,
that the per-multiplier closed forms for the conformal deformation
coefficients

    A = (1/2) * (pihat + 2 X(ln Omega) eta^{-1})

agree with the generic construction in inertial coordinates, where

    pihat^{ab} = d^a X^b + d^b X^a - eta^{ab} div X          (indices raised
                                                              with eta)

for a radial field X = Xu * del_u^B + Xr * del_r^B (Bondi frame:
del_u^B = d_t, del_r^B = d_t + d_r), i.e. inertial components
X^0 = Xu + Xr, X^i = Xr * w_i with w the radial unit vector.

The Bondi components of the resulting (2,0) tensor are recovered from the
inertial ones via the chain rule for u = t - r, r:

    A^{uu} = A^{00} - 2 A^{0i} w_i + A^{ij} w_i w_j
    A^{ur} = A^{0j} w_j - A^{ij} w_i w_j
    A^{rr} = A^{ij} w_i w_j
    A_sph  = A^{ij} (delta_ij - w_i w_j) / (2 r^2)   (coefficient of the
                                                      flat angular delta)

Everything is evaluated with mpmath at 50 significant digits over random
rational points; the closed forms are declared verified when the maximum
relative residual is below 1e-40.  The script then freezes a set of
binary64-representable sample values used as test fixtures.
"""

import json
import random
from mpmath import mp, mpf, sqrt, log

mp.dps = 60

# ---------------------------------------------------------------------------
# closed forms under test (written down from the derivation notes; these are
# the formulas the package will implement)
# ---------------------------------------------------------------------------


def tau_plus(ubar):
    return sqrt(1 + ubar * ubar)


def tau_minus(u):
    return sqrt(1 + u * u)


def closed_A(kind, a, u, r):
    """Return (Auu, Aur, Arr, Abc_scalar) from the per-kind closed forms."""
    ubar = u + 2 * r
    if kind == "T":
        return mpf(0), mpf(0), mpf(0), mpf(0)
    if kind == "Ka":
        # q = (ubar^{2a} - u^{2a})/r - 2a(ubar^{2a-1} + u^{2a-1})
        q = (ubar ** (2 * a) - u ** (2 * a)) / r - 2 * a * (
            ubar ** (2 * a - 1) + u ** (2 * a - 1)
        )
        return mpf(0), mpf(0), mpf(0), q / (2 * r * r)
    if kind == "Ya":
        tp, tm = tau_plus(ubar), tau_minus(u)
        auu = 4 * a * (1 - 2 * a) * tp ** (2 * a - 3) * ubar * tm
        aur = -auu / 2
        arr = (
            a * r ** (2 * a - 1)
            - a * (2 * a - 1) * tp ** (2 * a - 3) * ubar * tm
            - a * tp ** (2 * a - 1) * (u / tm)
        )
        abc = (
            (1 - a) * r ** (2 * a - 1)
            - a * tp ** (2 * a - 1) * (u / tm)
            + a * (1 - 2 * a) * tp ** (2 * a - 3) * ubar * tm
        ) / (r * r)
        return auu, aur, arr, abc
    if kind == "Kconf":
        return mpf(0), mpf(0), mpf(0), mpf(0)
    raise ValueError(kind)


def field_components(kind, a, u, r):
    """(Xu, Xr, Omega) at (u, r). Omega returned as a callable (u, r) -> val."""
    ubar = u + 2 * r
    if kind == "T":
        return mpf(1), mpf(0), lambda u, r: mpf(1)
    if kind == "Ka":
        return (
            1 + u ** (2 * a),
            (ubar ** (2 * a) - u ** (2 * a)) / 2,
            lambda u, r: r,
        )
    if kind == "Ya":
        tp, tm = tau_plus(ubar), tau_minus(u)
        return 1 + 2 * a * tp ** (2 * a) * (tm / tp), r ** (2 * a), lambda u, r: r
    if kind == "Kconf":
        # time component u^2 (pure conformal Morawetz); 2(u+r)r = 2tr
        return u * u, 2 * (u + r) * r, lambda u, r: u * (u + 2 * r)
    raise ValueError(kind)


# ---------------------------------------------------------------------------
# generic inertial-coordinates construction
# ---------------------------------------------------------------------------


def generic_A(kind, a, u, r):
    """A-components from pihat in inertial coords, by high-precision FD."""
    h = mpf("1e-12")

    def Xcart(t, x, y, z):
        rr = sqrt(x * x + y * y + z * z)
        uu = t - rr
        Xu, Xr, _ = field_components(kind, a, uu, rr)
        w = (x / rr, y / rr, z / rr)
        return (Xu + Xr, Xr * w[0], Xr * w[1], Xr * w[2])

    # place the sample point off-axis so all four Cartesian directions matter
    t = u + r
    x, y, z = r * mpf(2) / 7, r * mpf(3) / 7, r * mpf(6) / 7  # |w| = 1

    def dX(b, mu):
        """d_mu X^b by 4th-order central difference, step h."""
        p = [t, x, y, z]

        def at(shift):
            q = list(p)
            q[mu] += shift
            return Xcart(*q)[b]

        return (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h)

    eta = [mpf(-1), mpf(1), mpf(1), mpf(1)]  # diagonal
    J = [[dX(b, mu) for mu in range(4)] for b in range(4)]  # J[b][mu] = d_mu X^b
    div = sum(J[m][m] for m in range(4))
    pihat = [
        [eta[al] * J[be][al] + eta[be] * J[al][be] - (eta[al] if al == be else 0) * div
         for be in range(4)]
        for al in range(4)
    ]
    # X(ln Omega)
    _, _, Om = field_components(kind, a, u, r)
    Xu, Xr, _ = field_components(kind, a, u, r)

    def XlnOm(u, r):
        hh = mpf("1e-12")

        def d4(f):
            return (f(-2 * hh) - 8 * f(-hh) + 8 * f(hh) - f(2 * hh)) / (12 * hh)

        # del_u^B at fixed r, del_r^B at fixed u  (Omega given in (u, r))
        dOu = d4(lambda e: Om(u + e, r))
        dOr = d4(lambda e: Om(u, r + e))
        return (Xu * dOu + Xr * dOr) / Om(u, r)

    lam = XlnOm(u, r)
    A = [[pihat[al][be] / 2 + (lam if al == be else 0) * eta[al] for be in range(4)]
         for al in range(4)]
    w = (x / r, y / r, z / r)
    A00 = A[0][0]
    A0 = [A[0][i + 1] for i in range(3)]
    Aij = [[A[i + 1][j + 1] for j in range(3)] for i in range(3)]
    Aww = sum(Aij[i][j] * w[i] * w[j] for i in range(3) for j in range(3))
    A0w = sum(A0[i] * w[i] for i in range(3))
    Auu = A00 - 2 * A0w + Aww
    Aur = A0w - Aww
    Arr = Aww
    Atr = sum(Aij[i][i] for i in range(3))
    Abc = (Atr - Aww) / (2 * r * r)
    return Auu, Aur, Arr, Abc


def relerr(x, y):
    scale = max(abs(x), abs(y), mpf(1))
    return abs(x - y) / scale


def main():
    rnd = random.Random(20260814)
    worst = {}
    for kind, arange in [
        ("T", [(0, 1)]),
        ("Ka", [(1, 2), (3, 4), (1, 1)]),   # a in {1/2, 3/4, 1}
        ("Ya", [(0, 1), (1, 4), (1, 2)]),   # a in {0, 1/4, 1/2}
        ("Kconf", [(0, 1), (1, 2), (1, 1)]),
    ]:
        wmax = mpf(0)
        for num, den in arange:
            a = mpf(num) / den
            for _ in range(12):
                u = mpf(rnd.randint(11, 500)) / 10       # u in (1.1, 50)
                r = mpf(rnd.randint(2, 800)) / 10        # r in (0.2, 80)
                c = closed_A(kind, a, u, r)
                g = generic_A(kind, a, u, r)
                for cv, gv in zip(c, g):
                    wmax = max(wmax, relerr(cv, gv))
        worst[kind] = float(wmax)
        status = "OK " if wmax < mpf("1e-35") else "FAIL"
        print(f"{status} {kind:6s} max rel residual {mp.nstr(wmax, 3)}")

    # ------------------------------------------------------------------
    # frozen fixtures at exactly-representable points
    # ------------------------------------------------------------------
    fixtures = {"residuals": worst, "samples": []}
    for kind, a, u, r in [
        ("Ka", "0.75", "2", "3"),
        ("Ka", "1", "2", "3"),
        ("Ka", "0.5", "2", "3"),
        ("Ya", "0.25", "2", "3"),
        ("Ya", "0.5", "1.5", "4"),
        ("Ya", "0", "2", "3"),
        ("Kconf", "0.25", "2", "3"),
        ("T", "0", "2", "3"),
    ]:
        am, um, rm = mpf(a), mpf(u), mpf(r)
        c = closed_A(kind, am, um, rm)
        fixtures["samples"].append(
            {
                "kind": kind,
                "a": float(am),
                "u": float(um),
                "r": float(rm),
                "Auu": float(c[0]),
                "Aur": float(c[1]),
                "Arr": float(c[2]),
                "Abc_scalar": float(c[3]),
            }
        )
    with open("deformation_fixture.json", "w") as f:
        json.dump(fixtures, f, indent=1)
    print("wrote deformation_fixture.json")


if __name__ == "__main__":
    main()
