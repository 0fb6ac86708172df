import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wkgs.multipliers import (
    MultiplierSpec,
    closed_coefficients,
    conformal_potential,
    conjugate_pair,
    deformation_closed,
    deformation_generic,
    deformation_quadratic,
    field_components,
    flux_density,
    flux_density_components,
    flux_density_from_tensor,
    g_profile,
    kconf_dissipative_density,
    multiplier_field,
    omega_weight,
    power_gap,
    q_weight,
    weight_ratio,
    weight_ratio_bounds,
)

from conftest import load_fixture

DEFORM = load_fixture("deformation_fixture.json")
FLUX = load_fixture("flux_fixture.json")


# --- field components ----------------------------------------------------------


def test_ka_components_at_a1():
    xu, xr = field_components("Ka", 1.0, 2.0, 3.0)
    assert xu == 5.0  # 1 + u^2
    assert abs(xr - 30.0) <= 1e-13  # (ubar^2 - u^2)/2 via the power gap


def test_ka_at_half_is_the_scaling_type_field():
    u = np.array([1.5, 2.0, 7.0, 40.0])
    r = np.array([0.3, 1.0, 2.5, 10.0])
    xu, xr = field_components("Ka", 0.5, u, r)
    assert np.allclose(xu, 1.0 + u, rtol=0, atol=1e-13)
    assert np.allclose(xr, r, rtol=1e-14, atol=0)


def test_ya_collapses_at_a0():
    xu, xr = field_components("Ya", 0.0, 5.0, 2.0)
    assert xu == 1.0
    assert xr == 1.0


def test_kconf_time_component_is_u_squared():
    # the +1 of the r-weighted family would break the closed cancellation
    xu, xr = field_components("Kconf", 0.25, 2.0, 3.0)
    assert xu == 4.0
    assert xr == 2.0 * 5.0 * 3.0


def test_spec_validation():
    with pytest.raises(ValueError):
        MultiplierSpec("Kb", 0.5)
    with pytest.raises(ValueError):
        MultiplierSpec("Ka", 0.3)  # below [1/2, 1]
    with pytest.raises(ValueError):
        MultiplierSpec("Ya", 0.7)  # above [0, 1/2]
    MultiplierSpec("Ka", 0.5)
    MultiplierSpec("Ya", 0.5)


def test_r_weighted_kinds_reject_the_axis():
    # the raw field is finite on the axis (Xr -> 0); what degenerates is the
    # conjugation by Omega = r, so the guard sits on the conjugated entries
    spec = MultiplierSpec("Ka", 0.75)
    xu, xr = multiplier_field(spec, np.array([2.0]), np.array([0.0]))
    assert xr[0] == 0.0
    with pytest.raises(ValueError):
        conjugate_pair(spec, 5.0, np.array([0.0]), 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        deformation_closed(MultiplierSpec("Ya", 0.25), 2.0, 0.0)


# --- closed deformation coefficients ---------------------------------------------


def test_deformation_fixture_samples():
    for row in DEFORM["samples"]:
        c = closed_coefficients(row["kind"], row["a"], row["u"], row["r"])
        assert abs(c.auu - row["Auu"]) <= 1e-12 * max(1, abs(row["Auu"]))
        assert abs(c.aur - row["Aur"]) <= 1e-12 * max(1, abs(row["Aur"]))
        assert abs(c.arr - row["Arr"]) <= 1e-12 * max(1, abs(row["Arr"]))
        assert abs(c.abc_scalar - row["Abc_scalar"]) <= 1e-12 * max(
            1, abs(row["Abc_scalar"])
        )


def test_ka_three_quarters_bracket_value():
    # direct evaluation: q = (8^1.5 - 2^1.5)/3 - 1.5*(8^0.5 + 2^0.5), Abc = q/(2 r^2)
    q_direct = (8.0 ** 1.5 - 2.0 ** 1.5) / 1.5 / 2.0 - 1.5 * (8.0 ** 0.5 + 2.0 ** 0.5)
    c = closed_coefficients("Ka", 0.75, 2.0, 3.0)
    assert (c.auu, c.aur, c.arr) == (0.0, 0.0, 0.0)
    assert abs(c.abc_scalar - q_direct / 18.0) <= 1e-13
    assert abs(c.abc_scalar - 0.013094570021973102) <= 1e-15  # frozen oracle


def test_ka_endpoint_degeneracy():
    # equality cases a = 1/2 and a = 1: the whole set vanishes
    for a in (0.5, 1.0):
        c = closed_coefficients("Ka", a, 2.0, 3.0)
        assert (c.auu, c.aur, c.arr, c.abc_scalar) == (0.0, 0.0, 0.0, 0.0)


def test_t_and_kconf_deformations_vanish():
    for kind in ("T", "Kconf"):
        c = closed_coefficients(kind, 0.25, 1.7, 0.4)
        assert (c.auu, c.aur, c.arr, c.abc_scalar) == (0.0, 0.0, 0.0, 0.0)


cone_pts = st.tuples(
    st.floats(min_value=1.2, max_value=200.0),
    st.floats(min_value=0.05, max_value=0.95),
).map(lambda p: (p[0], p[1] * (p[0] - 1.0)))


@given(cone_pts, st.floats(min_value=0.02, max_value=0.48))
def test_ya_quadratic_form_is_positive_semidefinite(tr, a):
    t, r = tr
    u = t - r
    c = closed_coefficients("Ya", a, u, r)
    assert c.auu >= 0.0
    assert c.arr >= -1e-15 * max(1.0, abs(c.arr))
    # |aur| = auu/2 and arr >= auu/4 + nonneg, so the (dU,dR) block is PSD
    disc = c.auu * c.arr - c.aur * c.aur
    assert disc >= -1e-14 * max(c.auu * c.arr, 1e-30)
    vals = deformation_quadratic(c, 1.3, -0.7)
    assert vals >= -1e-13 * max(abs(c.auu), abs(c.arr), 1.0)


@given(
    cone_pts,
    st.sampled_from(["T", "Ka", "Ya", "Kconf"]),
    st.floats(min_value=0.05, max_value=0.45),
)
@settings(max_examples=40, deadline=None)
def test_closed_matches_generic_assembly(tr, kind, afrac):
    t, r = tr
    u = t - r
    lo, hi = {"T": (0, 1), "Ka": (0.5, 1), "Ya": (0, 0.5), "Kconf": (0, 1)}[kind]
    a = lo + (hi - lo) * (0.1 + 0.8 * afrac)
    spec = MultiplierSpec(kind, a)
    cc = deformation_closed(spec, u, r)
    cg = deformation_generic(spec, u, r)
    xu, xr = field_components(kind, a, u, r)
    # roundoff through the FD assembly: eps * field / (rel_step * length scale)
    noise = 1e-10 * max(1.0, abs(xu), abs(xr)) / min(r, u, 1.0)
    scale = max(abs(cc.auu), abs(cc.arr), abs(cc.abc_scalar) * r * r, 1e-30)
    for name in ("auu", "aur", "arr", "abc_scalar"):
        num = abs(getattr(cg, name) - getattr(cc, name))
        tol = 1e-7 * scale + noise
        if name == "abc_scalar":
            tol /= r * r
        assert num <= tol, (kind, a, name)


# --- conjugation potential and pair ----------------------------------------------


def test_conformal_potential_closed_zero():
    for weight, u, r in (("r", 2.0, 3.0), ("s2", 1.0, 1.0)):
        v, scale = conformal_potential(weight, u, r, path="closed")
        assert v == 0.0
        assert scale > 0.0


def test_conformal_potential_pieces_cancel():
    for weight in ("r", "s2"):
        for u, r in ((1.7, 0.9), (3.2, 2.5), (10.0, 4.0)):
            v, scale = conformal_potential(weight, u, r, path="pieces")
            assert abs(v) <= 1e-12 * scale


def test_conformal_potential_fd_bound():
    # 4th-order FD at the pinned step: residual below 1e-6 at the spot checks
    fx = load_fixture("potential_fixture.json")
    assert fx["fd_step"] == 1e-3
    for weight, key in (("r", "V_r_abs"), ("s2", "V_s2_abs")):
        for spot, (u, r) in (("u1.7_r0.9", (1.7, 0.9)), ("u3.2_r2.5", (3.2, 2.5))):
            v, _ = conformal_potential(weight, u, r, path="fd", step=1e-3)
            assert abs(v) <= fx["fd_bound"]
            # regression against the frozen FD values (loose: FD noise)
            assert abs(abs(v) - fx["fd_spots"][spot][key]) <= 10 * fx["fd_bound"]


def test_conformal_potential_rejects_axis_tube():
    with pytest.raises(ValueError):
        conformal_potential("r", 2.0, 1e-9)


def test_conjugate_pair_product_rule():
    # against explicit differentiation of Omega*phi for phi = t*r at (5, 2)
    t, r = 5.0, 2.0
    phi, pt, pr = t * r, r, t
    spec = MultiplierSpec("Ka", 0.75)
    Phi, dU, dR = conjugate_pair(spec, t, r, phi, pt, pr)
    assert Phi == r * phi
    assert dU == r * pt
    assert abs(dR - (r * (pt + pr) + phi)) <= 1e-13
    spec2 = MultiplierSpec("Kconf", 0.25)
    s2 = t * t - r * r
    Phi2, dU2, dR2 = conjugate_pair(spec2, t, r, phi, pt, pr)
    assert abs(Phi2 - s2 * phi) <= 1e-12
    assert abs(dU2 - (s2 * pt + 2 * t * phi)) <= 1e-11
    assert abs(dR2 - (s2 * (pt + pr) + 2 * (t - r) * phi)) <= 1e-11


# --- flux density ------------------------------------------------------------------


def test_flux_of_unit_bondi_pair_under_T():
    # Phi = t: both Bondi derivatives are 1; value 1/2 == Q(N', T) frozen by
    # the oracle (the quadratic form collapses to dR^2/2 at Xu=1, Xr=0... the
    # w-terms cancel)
    got = flux_density_components(1.0, 0.0, 1.0, 5.0, 3.0, 1.0, 1.0)
    assert got.value == FLUX["flux_T_phi_t_at_t5_r3"] == 0.5
    assert got.lower <= got.value <= got.upper


def test_flux_zero_partials():
    got = flux_density_components(3.0, 7.0, 1.5, 5.0, 3.0, 0.0, 0.0)
    assert (got.value, got.lower, got.upper) == (0.0, 0.0, 0.0)


def test_flux_spot2_regression():
    xu, xr, lam, om, pot_b, w, rt, dU, dR, sl, Phi = FLUX["spot2"]["args"]
    t = 5.0  # w = 0.4, rt = 0.6 encode (t, r) = (5, 3)
    r = 3.0
    assert (w, rt) == (1 - r / t, r / t)
    got = flux_density_components(xu, xr, lam, t, r, dU, dR,
                                  slash_sq=sl * sl, pot_b=pot_b, Phi=Phi)
    assert abs(got.value - FLUX["spot2"]["value"]) <= 1e-13
    assert abs(got.lower - FLUX["spot2"]["lower"]) <= 1e-13
    assert abs(got.upper - FLUX["spot2"]["upper"]) <= 1e-13


finite = st.floats(min_value=-4.0, max_value=4.0)
nonneg = st.floats(min_value=0.0, max_value=4.0)


@given(cone_pts, nonneg, nonneg, finite, finite, nonneg)
def test_flux_dual_assembly_and_coercivity(tr, xu, xr, dU, dR, sl):
    t, r = tr
    fd = flux_density_components(xu, xr, 1.0, t, r, dU, dR, slash_sq=sl * sl)
    other = flux_density_from_tensor(xu, xr, 1.0, t, r, dU, dR, slash_sq=sl * sl)
    scale = max(abs(fd.value), abs(other), 1e-6)
    assert abs(fd.value - other) <= 1e-12 * scale
    assert fd.lower <= fd.value + 1e-12 * scale
    assert fd.value <= fd.upper + 1e-12 * scale


@given(cone_pts, st.floats(min_value=0.0, max_value=1.0), finite, finite)
def test_kconf_dissipative_density_sign(tr, a, dU, dR):
    t, r = tr
    val = kconf_dissipative_density(a, t, r, dU, dR)
    assert val >= -1e-14 * max(dU * dU + dR * dR, 1e-30)


# --- scalar weight lemma -----------------------------------------------------------


def test_q_weight_endpoint_zeros_are_exact():
    assert q_weight(1.0, 2.0, 8.0) == 0.0
    assert q_weight(0.5, 2.0, 8.0) == 0.0
    assert q_weight(0.0, 2.0, 8.0) == 0.0


def test_q_weight_pinned_signs():
    # direct-formula evaluation is well-conditioned at this spot
    direct = (8.0 ** 1.5 - 2.0 ** 1.5) / 3.0 - 1.5 * (8.0 ** 0.5 + 2.0 ** 0.5)
    got = q_weight(0.75, 2.0, 8.0)
    assert abs(got - direct) <= 1e-13
    assert got > 0.0
    assert q_weight(0.25, 2.0, 8.0) <= 0.0


@given(
    cone_pts,
    st.floats(min_value=0.0, max_value=1.0),
)
def test_q_weight_sign_pattern(tr, a):
    t, r = tr
    u, ub = t - r, t + r
    q = q_weight(a, u, ub)
    if a >= 0.5:
        assert q >= -1e-12 * max(1.0, ub ** max(2 * a - 1, 0.0))
    if a <= 0.5:
        assert q <= 1e-12 * max(1.0, ub ** max(2 * a - 1, 0.0))


@given(cone_pts, st.floats(min_value=0.5, max_value=1.0))
def test_weight_ratio_two_sided_bounds(tr, a):
    t, r = tr
    lo, hi = weight_ratio_bounds(a)
    ratio = weight_ratio(a, t, r)
    assert lo - 1e-12 <= ratio <= hi + 1e-12


@given(st.floats(min_value=0.5, max_value=1.0),
       st.floats(min_value=1e-6, max_value=0.999999))
def test_g_profile_bounds(a, w):
    lo, g, hi = g_profile(a, w)
    assert lo - 1e-12 * hi <= g <= hi * (1 + 1e-12)


@given(st.floats(min_value=0.1, max_value=3.0),
       st.floats(min_value=0.5, max_value=100.0),
       st.floats(min_value=1e-12, max_value=50.0))
def test_power_gap_matches_naive_when_conditioned(p, lo, delta):
    hi = lo + delta
    stable = power_gap(p, lo, hi)
    naive = hi ** p - lo ** p
    # the naive form loses ~(lo/delta)*eps relative; compare in its own noise
    noise = 1e-14 * hi ** p * max(1.0, lo / delta)
    assert abs(stable - naive) <= max(noise, 1e-14 * abs(stable))


def test_omega_weights():
    spec_t = MultiplierSpec("T", 0.0)
    spec_r = MultiplierSpec("Ka", 0.75)
    spec_s = MultiplierSpec("Kconf", 0.25)
    assert omega_weight(spec_t, 2.0, 3.0) == 1.0
    assert omega_weight(spec_r, 2.0, 3.0) == 3.0
    assert omega_weight(spec_s, 2.0, 3.0) == 2.0 * 8.0  # u * ubar = s^2


def test_flux_density_spec_entry_point():
    spec = MultiplierSpec("T", 0.0)
    fd = flux_density(spec, 5.0, 3.0, 1.0, 1.0)
    assert fd.value == 0.5
