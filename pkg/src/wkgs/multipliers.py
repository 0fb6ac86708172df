"""Vector-field multipliers, their deformation coefficients, and flux forms.

Four multiplier families act on the conjugated field Phi = Omega * phi:

  kind      X^u            X^r                      Omega    Lambda
  ------    -----------    ---------------------    -----    ---------
  T         1              0                        1        1
  Ka        1 + u^(2a)     (ubar^(2a) - u^(2a))/2   r        1          a in [1/2, 1]
  Ya        1 + 2a tp^(2a) tau0    r^(2a)           r        1          a in [0, 1/2]
  Kconf     u^2            2(u + r) r               s^2      s^(2a-2)   a in [0, 1]

(u = t - r, ubar = t + r, tp = <ubar>, tau0 = <u>/<ubar>.)  Components are
functions on the (u, r) chart; X^u, X^r multiply the Bondi derivatives
del_u^B Phi = Phi_t and del_r^B Phi = (Phi_t + Phi_r).

The deformation coefficients (A^uu, A^ur, A^rr, A^[bc]) enter the bulk term
of the multiplier identity.  Two independent evaluations are provided: the
per-family closed forms, and the generic assembly

  A^uu   = -Dr Xu
  A^ur   = Dr Xu / 2 + xs
  A^rr   = Dr Xr / 2 - Du Xu / 2 - Du Xr - xs
  A^[bc] = (Xr/r - Du Xu / 2 - Dr Xr / 2 - xs) / r^2
  xs     = Xr/r - X(log Omega)

with (Du, Dr) the (u, r)-chart partials taken by high-order finite
differences.  Agreement of the two paths is one of the library's core
identity checks.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import _lib, jbracket, slice_label

KINDS = ("T", "Ka", "Ya", "Kconf")

_A_RANGE = {"T": (0.0, 1.0), "Ka": (0.5, 1.0), "Ya": (0.0, 0.5), "Kconf": (0.0, 1.0)}


@dataclass(frozen=True)
class MultiplierSpec:
    kind: str
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown multiplier kind {self.kind!r}")
        lo, hi = _A_RANGE[self.kind]
        if not (lo <= self.a <= hi):
            raise ValueError(
                f"exponent a={self.a} outside [{lo}, {hi}] for kind {self.kind}"
            )


@dataclass
class CoefficientSet:
    """Deformation coefficients in the Bondi frame ((uu, ur, rr) blocks and
    the tangential scalar multiplying r^2 |slash Phi|^2 / r^2)."""

    auu: float
    aur: float
    arr: float
    abc_scalar: float


@dataclass
class FluxDensity:
    value: float
    lower: float
    upper: float


def _check_axis(kind, r):
    if kind in ("Ka", "Ya"):
        if np.any(np.equal(r, 0)):
            raise ValueError(f"kind {kind} is r-weighted; undefined on the axis r=0")


def _components_var(kind, a, u, r):
    """(Xu - const, Xr) with the additive constant of Xu removed.

    The fluctuating parts are what finite differences must see: differencing
    1 + tiny against 1 + tiny loses the tiny part to roundoff.  Xr of Ka
    goes through the stable power gap with the exact increment 2r, since
    ubar^2a - u^2a cancels catastrophically for r << u.
    """
    one = 1 + 0 * (u + r)
    if kind == "T":
        return 0 * one, 0 * one
    if kind == "Ka":
        return u ** (2 * a), power_gap_delta(2 * a, u, 2 * r) / 2
    if kind == "Ya":
        ub = u + 2 * r
        tp = jbracket(ub)
        tm = jbracket(u)
        return 2 * a * tp ** (2 * a) * (tm / tp), r ** (2 * a) * one
    if kind == "Kconf":
        return u * u, 2 * (u + r) * r
    raise ValueError(kind)


def _xu_const(kind):
    return 0.0 if kind == "Kconf" else 1.0


def field_components(kind, a, u, r):
    """(Xu, Xr) at (u, r); a may be an array broadcast against u, r.

    No range validation here — use multiplier_field / MultiplierSpec for
    the checked entry point.
    """
    xv, xr = _components_var(kind, a, u, r)
    return xv + _xu_const(kind), xr


def multiplier_field(spec, u, r):
    """(Xu, Xr) at (u, r).  No derivatives taken; valid for arrays and mpf."""
    return field_components(spec.kind, spec.a, u, r)


def omega_weight(spec, u, r):
    """Conjugation weight Omega at (u, r)."""
    if spec.kind == "T":
        return 1 + 0 * (u + r)
    if spec.kind in ("Ka", "Ya"):
        return r
    return u * (u + 2 * r)  # s^2


def lambda_weight(spec, s):
    """Slice weight Lambda(s)."""
    if spec.kind == "Kconf":
        return s ** (2 * spec.a - 2)
    return 1 + 0 * s


def conjugate_pair(spec, t, r, phi, phi_t, phi_r):
    """(Phi, dU, dR): conjugated field Phi = Omega phi and its Bondi pair.

    Uses the product-rule identities for each weight, so no derivative of
    Omega is ever formed numerically:
      Omega = 1  :  (phi_t,               phi_t + phi_r)
      Omega = r  :  (r phi_t,             r(phi_t + phi_r) + phi)
      Omega = s^2:  (s^2 phi_t + 2t phi,  s^2(phi_t + phi_r) + 2u phi)
    """
    if spec.kind == "T":
        return phi, phi_t, phi_t + phi_r
    if spec.kind in ("Ka", "Ya"):
        _check_axis(spec.kind, r)
        return r * phi, r * phi_t, r * (phi_t + phi_r) + phi
    u = t - r
    s2 = u * (t + r)
    return s2 * phi, s2 * phi_t + 2 * t * phi, s2 * (phi_t + phi_r) + 2 * u * phi


# ---------------------------------------------------------------------------
# deformation coefficients


def ya_closed_blocks(a, u, r):
    """The two axis-regular blocks (m, n) of the Ya closed coefficients.

    auu = 4m, aur = -2m, arr = a r^(2a-1) + m - n.  Exposed separately so
    slab quadratures can split the integrable-but-unbounded r^(2a-1) piece
    off and keep the remainder smooth through r = 0.
    """
    ub = u + 2 * r
    tp = jbracket(ub)
    tm = jbracket(u)
    m = a * (1 - 2 * a) * tp ** (2 * a - 3) * ub * tm
    n = a * tp ** (2 * a - 1) * (u / tm)
    return m, n


def closed_coefficients(kind, a, u, r):
    """Closed-form coefficient set; exact zeros for T and Kconf.

    a may be an array broadcast against (u, r); no validation.
    """
    zero = 0 * (u + r)
    if kind in ("T", "Kconf"):
        return CoefficientSet(zero, zero, zero, zero)
    if kind == "Ka":
        q = _q_weight_delta(a, u, 2 * r)
        return CoefficientSet(zero, zero, zero, q / (2 * r * r))
    if kind != "Ya":
        raise ValueError(kind)
    m, n = ya_closed_blocks(a, u, r)
    k = r ** (2 * a - 1)
    return CoefficientSet(
        auu=4 * m,
        aur=-2 * m,
        arr=a * k + m - n,
        abc_scalar=((1 - a) * k - n + m) / (r * r),
    )


def deformation_closed(spec, u, r):
    """Closed-form deformation coefficients for a validated multiplier."""
    if spec.kind in ("Ka", "Ya"):
        _check_axis(spec.kind, r)
    return closed_coefficients(spec.kind, spec.a, u, r)


def _dlog_omega(kind, u, r):
    """(u, r)-chart partials of log Omega as numerators over a shared
    denominator: returns (nu, nr, den) with d(log Omega) = (nu/den, nr/den).

    Keeping the denominator shared lets the caller combine the directional
    derivative as a single quotient, which cancels exactly (not just to
    rounding) against Xr/r for the polynomial weight families.
    """
    one = 1 + 0 * u
    if kind == "T":
        return 0 * u, 0 * u, one
    if kind in ("Ka", "Ya"):
        return 0 * u, one, r
    return 2 * (u + r), 2 * u, u * (u + 2 * r)


def _fd4(f, x, h):
    """Fourth-order central first derivative."""
    return (8 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12 * h)


def _fd4_with_mag(f, x, h, ab):
    """FD derivative plus its pre-cancellation stencil magnitude.

    The stencil is a signed combination of four evaluations; the returned
    magnitude sums |coeff|*|value|/(12h), the total mass actually combined.
    A relative residual measured against this (rather than the cancelled
    derivative value) stays meaningful where the derivative itself is tiny
    or exactly zero.
    """
    fp1, fm1 = f(x + h), f(x - h)
    fp2, fm2 = f(x + 2 * h), f(x - 2 * h)
    val = (8 * (fp1 - fm1) - (fp2 - fm2)) / (12 * h)
    mag = (8 * (ab(fp1) + ab(fm1)) + ab(fp2) + ab(fm2)) / (12 * h)
    return val, mag


def generic_coefficients(kind, a, u, r, rel_step=1e-4, with_scales=False):
    """Coefficient set via the generic assembly with FD chart partials.

    Array-capable (a, u, r broadcast).  Steps are directional,
    hu = rel_step*|u| and hr = rel_step*|r|: each component varies on the
    scale of its own argument, and r - 2h must stay positive for the
    fractional powers.  With the 4th-order stencil the truncation error
    then sits far below the identity tolerances in both binary64 and
    extended precision.  with_scales=True additionally returns a
    CoefficientSet of internal term magnitudes — FD derivatives contribute
    their pre-cancellation stencil mass — the right normalizer for
    relative residuals of these cancellation-prone assemblies.
    """
    lib = _lib(u, r)
    ab = abs if lib is not np else np.abs
    hu = rel_step * ab(u)
    hr = rel_step * ab(r)
    du_xu, m_du_xu = _fd4_with_mag(lambda uu: _components_var(kind, a, uu, r)[0], u, hu, ab)
    du_xr, m_du_xr = _fd4_with_mag(lambda uu: _components_var(kind, a, uu, r)[1], u, hu, ab)
    dr_xu, m_dr_xu = _fd4_with_mag(lambda rr: _components_var(kind, a, u, rr)[0], r, hr, ab)
    dr_xr, m_dr_xr = _fd4_with_mag(lambda rr: _components_var(kind, a, u, rr)[1], r, hr, ab)
    xu, xr = field_components(kind, a, u, r)
    nu_, nr_, den = _dlog_omega(kind, u, r)
    xs = xr / r - (xu * nu_ + xr * nr_) / den
    coeffs = CoefficientSet(
        auu=-dr_xu,
        aur=dr_xu / 2 + xs,
        arr=dr_xr / 2 - du_xu / 2 - du_xr - xs,
        abc_scalar=(xr / r - du_xu / 2 - dr_xr / 2 - xs) / (r * r),
    )
    if not with_scales:
        return coeffs
    sc_xs = ab(xr / r) + (ab(xu * nu_) + ab(xr * nr_)) / den
    scales = CoefficientSet(
        auu=m_dr_xu,
        aur=m_dr_xu / 2 + sc_xs,
        arr=m_dr_xr / 2 + m_du_xu / 2 + m_du_xr + sc_xs,
        abc_scalar=(ab(xr / r) + m_du_xu / 2 + m_dr_xr / 2 + sc_xs) / (r * r),
    )
    return coeffs, scales


def deformation_generic(spec, u, r, rel_step=1e-4):
    """Generic-assembly deformation coefficients for a validated multiplier."""
    if np.any(np.equal(r, 0)):
        raise ValueError("generic assembly needs r > 0 (tangential block has 1/r^2)")
    return generic_coefficients(spec.kind, spec.a, u, r, rel_step)


def deformation_quadratic(coeffs, dU, dR, r=None, slash_sq=0.0):
    """Bulk contraction A[dPhi, dPhi] from a CoefficientSet.

    slash_sq is the squared tangential gradient |slash Phi|^2; it couples
    through abc_scalar * r^2 * slash_sq (abc_scalar carries a 1/r^2).
    Radial fields: omit both.
    """
    out = coeffs.auu * dU * dU + 2 * coeffs.aur * dU * dR + coeffs.arr * dR * dR
    if np.any(np.not_equal(slash_sq, 0)):
        out = out + coeffs.abc_scalar * r * r * slash_sq
    return out


# ---------------------------------------------------------------------------
# flux density on a slice


def flux_density(spec, t, r, dU, dR, slash_sq=0.0, pot_b=0.0, Phi=0.0):
    """Slice flux density of the conjugated field, with coercive envelopes.

    dU, dR are the Bondi pair of Phi = Omega phi; pot_b is the potential
    coefficient (c^2 for Klein-Gordon under T, else 0).  Returns
    FluxDensity(value, lower, upper) with

      value = Lam * [ Xu w dU^2 + (Xu + Xr(1+r/t)) dR^2/2 - Xu w dU dR
                      + (Xu + Xr w) slash^2/2 + pot_b Phi^2/2 ],  w = 1 - r/t,

    and lower/upper replacing the (dU, dR) core Xu w (dU^2 + dR^2/2 - dU dR)
    by Xu w (dU^2/3 + dR^2/8) resp. Xu w (5 dU^2/3 + 7 dR^2/8); both gaps
    are perfect squares (the epsilon^2 = 3/4 split), so
    lower <= value <= upper pointwise.
    """
    u = t - r
    xu, xr = multiplier_field(spec, u, r)
    lam = lambda_weight(spec, slice_label(t, r))
    return flux_density_components(xu, xr, lam, t, r, dU, dR, slash_sq, pot_b, Phi)


def flux_density_components(xu, xr, lam, t, r, dU, dR, slash_sq=0.0,
                            pot_b=0.0, Phi=0.0):
    """flux_density with the multiplier data (Xu, Xr, Lambda) already in hand."""
    w = 1 - r / t
    rt = r / t
    core_v = xu * w * (dU * dU + dR * dR / 2 - dU * dR)
    core_l = xu * w * (dU * dU / 3 + dR * dR / 8)
    core_u = xu * w * (5 * dU * dU / 3 + 7 * dR * dR / 8)
    shared = (
        xu * (rt * dR * dR + slash_sq) / 2
        + xr * ((1 + rt) * dR * dR + w * slash_sq) / 2
        + pot_b * Phi * Phi / 2
    )
    return FluxDensity(
        value=lam * (core_v + shared),
        lower=lam * (core_l + shared),
        upper=lam * (core_u + shared),
    )


def flux_density_from_tensor(xu, xr, lam, t, r, dU, dR, slash_sq=0.0,
                             pot_b=0.0, Phi=0.0):
    """Independent flux assembly through the energy-tensor components.

    Q_uu = dU^2 + dR^2/2 + slash^2/2 - dU dR, Q_ur = dR^2/2 + slash^2/2,
    Q_rr = dR^2; contraction against the slice normal decomposition gives

      Lam * [ Xu w Q_uu + (Xu r/t + Xr w) Q_ur + Xr (r/t) Q_rr ] + potential.

    Must agree with flux_density(...).value identically.
    """
    w = 1 - r / t
    rt = r / t
    quu = dU * dU + dR * dR / 2 + slash_sq / 2 - dU * dR
    qur = dR * dR / 2 + slash_sq / 2
    qrr = dR * dR
    return lam * (
        xu * w * quu + (xu * rt + xr * w) * qur + xr * rt * qrr
        + pot_b * Phi * Phi / 2
    )


def kconf_dissipative_density(a, t, r, dU, dR):
    """Integrand of the sign-definite bulk term of the conformal multiplier.

    Radial fields; (dU, dR) is the Bondi pair of Phi = s^2 phi.  Density per
    unit dVol ds is (2-2a) s^(2a-7) Q(N, X) with N the future unit normal
    direction (t/s, r/s) and X the conformal field in inertial components
    (Xu + Xr, Xr).  Nonnegative for a <= 1.
    """
    s = slice_label(t, r)
    u = t - r
    pt, pr = dU, dR - dU
    qtt = (pt * pt + pr * pr) / 2
    qtr = pt * pr
    qrr = qtt
    nt, nr = t / s, r / s
    xu, xr = u * u, 2 * (u + r) * r
    xt, xrad = xu + xr, xr
    qnx = qtt * nt * xt + qtr * (nt * xrad + nr * xt) + qrr * nr * xrad
    return (2 - 2 * a) * s ** (2 * a - 7) * qnx


# ---------------------------------------------------------------------------
# scalar weight lemma machinery


def power_gap_delta(p, lo, delta):
    """(lo + delta)^p - lo^p for lo > 0, delta >= 0, without cancellation.

    lo^p * expm1(p * log1p(delta/lo)); exact zero at p = 0.  Passing the
    increment directly avoids reconstructing it from a rounded sum.
    """
    lib = _lib(p, lo, delta)
    return lo ** p * lib.expm1(p * lib.log1p(delta / lo))


def power_gap(p, lo, hi):
    """hi^p - lo^p for 0 < lo < hi, stable when hi - lo << lo."""
    return power_gap_delta(p, lo, hi - lo)


def _q_weight_delta(a, u, delta):
    p = 2 * a
    ubar = u + delta
    d_main = power_gap_delta(p, u, delta)
    d_conj = power_gap_delta(2 - p, u, delta)
    return ((2 - p) * d_main - p * (u * ubar) ** (p - 1) * d_conj) / delta


def q_weight(a, u, ubar):
    """q(a; u, ubar) = (ubar^2a - u^2a)/r - 2a (ubar^(2a-1) + u^(2a-1)).

    Written through power gaps so the two grouped terms cancel without
    catastrophic loss; returns an exact 0.0 at a in {0, 1/2, 1}.
    Sign pattern over the cone region: >= 0 for a in [1/2, 1] (vanishing at
    both ends), <= 0 for a in [0, 1/2).
    """
    return _q_weight_delta(a, u, ubar - u)


def g_profile(a, omega):
    """(lower, g, upper) for g = (1+w)^2a - (1-w)^2a on 0 <= w < 1.

    Bounds 2aw <= g <= 2a(2^(2a-1)+1) w hold for a in [1/2, 1].
    """
    lib = _lib(a, omega)
    g = lib.expm1(2 * a * lib.log1p(omega)) - lib.expm1(2 * a * lib.log1p(-omega))
    lo = 2 * a * omega
    hi = 2 * a * (2 ** (2 * a - 1) + 1) * omega
    return lo, g, hi


def weight_ratio(a, t, r):
    """(ubar^2a - u^2a) / (a r t^(2a-1)); lies in [2, 2(2^(2a-1)+1)]
    for a in [1/2, 1] on r > 0."""
    u = t - r
    return power_gap(2 * a, u, u + 2 * r) / (a * r * t ** (2 * a - 1))


def weight_ratio_bounds(a):
    return 2.0, 2 * (2 ** (2 * a - 1) + 1)


def q_convexity_slope(a, u, ubar):
    """f''(r)-proxy (2a-1) 2a (ubar^(2a-2) - u^(2a-2)); <= 0 for a in [1/2,1]."""
    return (2 * a - 1) * 2 * a * (ubar ** (2 * a - 2) - u ** (2 * a - 2))


# ---------------------------------------------------------------------------
# conjugation potential (identically zero for both weights; three routes)


def _pieces(weight, u, r):
    """Bondi-chart pieces of box(1/Omega): (f_rr, -2 f_ur, (2/r)(f_r - f_u))."""
    if weight == "r":
        return 2 / r ** 3, 0 * u, -2 / r ** 3
    if weight == "s2":
        ub = u + 2 * r
        f_u = -2 * (u + r) / (u * ub) ** 2
        f_r = -2 / (u * ub * ub)
        f_rr = 8 / (u * ub ** 3)
        f_ur = 2 * (3 * u + 2 * r) / (u * u * ub ** 3)
        return f_rr, -2 * f_ur, (2 / r) * (f_r - f_u)
    raise ValueError(weight)


def conformal_potential(weight, u, r, path="closed", step=1e-3):
    """Potential generated by conjugating the wave operator with Omega.

    Returns (value, scale) where scale is the magnitude of the cancelling
    pieces (use it for relative residuals).  Routes:
      'closed' : the exact value, 0 — both weights are d'Alembert-harmonic;
      'pieces' : analytic Bondi pieces summed, exposing the cancellation;
      'fd'     : finite-difference d'Alembertian of 1/Omega, 4th order,
                 absolute step `step` in the (u, r) chart.
    r below the axis tube is rejected (the pieces carry 1/r^3).
    """
    if np.min(np.asarray(r, dtype=float)) < 1e-8:
        raise ValueError("conformal potential undefined that close to the axis")
    lib = _lib(u, r)
    om3 = r ** 3 if weight == "r" else (u * (u + 2 * r)) ** 3
    if path == "closed":
        return 0 * (u + r), om3 * abs(_pieces(weight, u, r)[0])
    if path == "pieces":
        p1, p2, p3 = _pieces(weight, u, r)
        if lib is np:
            scale = np.maximum(np.abs(p1), np.maximum(np.abs(p2), np.abs(p3))) * om3
        else:
            scale = om3 * max(abs(p1), abs(p2), abs(p3))
        return om3 * (p1 + p2 + p3), scale
    if path == "fd":
        f = (lambda uu, rr: 1 / rr) if weight == "r" else (
            lambda uu, rr: 1 / (uu * (uu + 2 * rr))
        )
        h = step
        d2r = (
            -(f(u, r + 2 * h) + f(u, r - 2 * h))
            + 16 * (f(u, r + h) + f(u, r - h))
            - 30 * f(u, r)
        ) / (12 * h * h)
        dr = _fd4(lambda rr: f(u, rr), r, h)
        du = _fd4(lambda uu: f(uu, r), u, h)
        dur = _fd4(lambda uu: _fd4(lambda rr: f(uu, rr), r, h), u, h)
        pieces = (d2r, -2 * dur, (2 / r) * (dr - du))
        scale = max(abs(float(p)) for p in pieces) * float(om3)
        return om3 * (pieces[0] + pieces[1] + pieces[2]), scale
    raise ValueError(path)
