import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from wkgs.geometry import (
    classify_domain,
    cone_cut_radius,
    cone_weight,
    frame_transform,
    in_cone_region,
    jbracket,
    lapse_ratio,
    nprime_split,
    optical_u,
    optical_ubar,
    slice_label,
    slice_time,
    tau_weights,
)


def test_pythagorean_labels():
    assert slice_label(5.0, 3.0) == 4.0
    assert optical_u(5.0, 3.0) == 2.0
    assert optical_ubar(5.0, 3.0) == 8.0
    assert slice_time(4.0, 3.0) == 5.0
    assert slice_time(2.0, 0.0) == 2.0


def test_center_axis():
    tm, tp, tau0 = tau_weights(7.0, 0.0)
    assert tm == tp
    assert tau0 == 1.0
    assert slice_label(7.0, 0.0) == 7.0


def test_outside_cone_membership():
    assert not in_cone_region(1.0, 2.0)
    assert in_cone_region(10.0, 8.9)
    assert not in_cone_region(10.0, 9.0)  # boundary r = t-1 excluded


def test_slice_time_large_radius_extended():
    # t = sqrt(1 + 1e12) at s=1, r=1e6: binary64 against 50-digit arithmetic
    got = slice_time(1.0, 1.0e6)
    with mpmath.workdps(50):
        want = mpmath.sqrt(mpmath.mpf(1) + mpmath.mpf(10) ** 12)
        err = abs(mpmath.mpf(got) - want) / want
    assert err <= 1e-14


def test_nprime_coefficients():
    assert nprime_split(5.0, 3.0) == (0.4, 0.6)
    alpha, beta = nprime_split(9.0, 0.0)
    assert (alpha, beta) == (1.0, 0.0)  # N' = d_t on the axis


def test_nprime_consistency_with_scaled_normal():
    # (s/t)*N == N' componentwise.  N = (t/s) d_t + (r/s) d_r, so the scaled
    # normal has inertial components (1, r/t); in the Bondi frame
    # c_t d_t + c_r d_r = (c_t - c_r) dB_u + c_r dB_r.
    t, r = 5.0, 3.0
    s = slice_label(t, r)
    c_t = (s / t) * (t / s)
    c_r = (s / t) * (r / s)
    alpha, beta = nprime_split(t, r)
    assert abs((c_t - c_r) - alpha) <= 1e-14
    assert abs(c_r - beta) <= 1e-14


def test_domain_classification():
    assert classify_domain(10.0, 1.0) == "interior"
    assert classify_domain(10.0, 6.0) == "wave"
    assert classify_domain(10.0, 9.5) == "exterior"


def test_frame_transform_phi_equals_t():
    fr = frame_transform(5.0, 3.0, 1.0, 0.0)
    assert fr.bondi_u == 1.0
    assert fr.bondi_r == 1.0
    assert fr.under_r == 0.6
    assert not fr.on_axis


def test_frame_transform_phi_equals_s_squared():
    # phi = s^2 = t^2 - r^2: tangential derivative vanishes on the slice
    t, r = 4.0, 2.5
    fr = frame_transform(t, r, 2 * t, -2 * r)
    assert abs(fr.under_r) <= 1e-13


def test_frame_transform_constant_field():
    fr = frame_transform(3.0, 1.0, 0.0, 0.0)
    assert fr.dt == fr.dr == fr.bondi_u == fr.bondi_r == fr.under_r == 0.0
    assert fr.slash_sq == 0.0


def test_frame_transform_rejects_bad_gradient_split():
    # |grad phi|^2 below (d_r phi)^2 beyond roundoff is not a decomposition
    with pytest.raises(ValueError):
        frame_transform(5.0, 3.0, 0.0, 1.0, grad_sq=0.5)


cone_points = st.tuples(
    st.floats(min_value=1.2, max_value=1e3),
    st.floats(min_value=0.0, max_value=0.999),
).map(lambda p: (p[0], p[1] * (p[0] - 1.0)))


@given(cone_points, st.floats(min_value=1.01, max_value=100.0))
def test_slice_label_time_roundtrip(tr, s):
    # recovering s from (t, r) goes through the t-r cancellation, whose
    # condition number is (t/s)^2; the tolerance must carry that factor
    t, r = tr
    t_of_s = slice_time(s, r)
    k1 = 1.0 + (t_of_s / s) ** 2
    assert rel_close(slice_label(t_of_s, r), s, tol=32e-16 * k1)
    k2 = 1.0 + (t / slice_label(t, r)) ** 2
    assert rel_close(slice_time(slice_label(t, r), r), t, tol=32e-16 * k2)


@given(cone_points)
def test_nprime_split_is_a_convex_split(tr):
    t, r = tr
    alpha, beta = nprime_split(t, r)
    assert abs(alpha + beta - 1.0) <= 1e-15
    assert 0.0 < alpha <= 1.0
    assert 0.0 <= beta < 1.0


@given(st.floats(min_value=-1e8, max_value=1e8))
def test_jbracket_dominates(x):
    b = jbracket(x)
    assert b >= 1.0
    assert b >= abs(x)


@given(cone_points)
def test_tau_ordering_and_cone_weight(tr):
    t, r = tr
    tm, tp, tau0 = tau_weights(t, r)
    assert tm <= tp
    assert 0.0 < tau0 <= 1.0
    w = cone_weight(t, r)
    assert 0.0 < w <= 1.0
    # w is comparable to (s/t)^2 inside the cone: w <= (s/t)^2 <= 2w
    st2 = lapse_ratio(t, r) ** 2
    assert w <= st2 * (1 + 1e-12)
    assert st2 <= 2.0 * w * (1 + 1e-12)


@given(st.floats(min_value=1.05, max_value=300.0))
def test_cone_cut_radius_is_the_membership_boundary(s):
    rc = cone_cut_radius(s)
    t = slice_time(s, rc)
    assert abs((t - rc) - 1.0) <= 1e-9 * max(1.0, t)


def rel_close(got, want, tol=1e-12):
    return abs(got - want) <= tol * max(1.0, abs(want))
