"""Hyperboloidal slicing geometry and adapted derivative frames.

Coordinates: inertial (t, x) with r = |x|.  A slice of the foliation is the
upper hyperboloid t^2 - r^2 = s^2 (t > 0), truncated to the interior cone
region r < t - 1.  Null coordinates u = t - r, ubar = t + r.

All functions accept numpy arrays / floats, and also mpmath.mpf scalars for
extended-precision work: the arithmetic is written against a small dispatch
shim so the same formulas serve both modes.
"""

from dataclasses import dataclass

import numpy as np

try:
    import mpmath

    _MPF = (mpmath.mpf, mpmath.mpc)
except ImportError:  # pragma: no cover
    mpmath = None
    _MPF = ()

SLASH_CLAMP = 1e-12  # tolerated negative roundoff in the tangential gradient
AXIS_TUBE = 1e-6  # exclusion radius around r = 0 for r-weighted formulas


def _lib(*xs):
    """Pick numpy or mpmath based on the operand types."""
    for x in xs:
        if isinstance(x, _MPF):
            return mpmath
    return np


# ---------------------------------------------------------------------------
# slice parametrizations and null/japanese-bracket weights


def slice_time(s, r):
    """t on the hyperboloid labelled s at radius r."""
    lib = _lib(s, r)
    return lib.sqrt(s * s + r * r)


def slice_label(t, r):
    """s = sqrt(t^2 - r^2); caller guarantees t > r."""
    lib = _lib(t, r)
    return lib.sqrt((t - r) * (t + r))


def optical_u(t, r):
    return t - r


def optical_ubar(t, r):
    return t + r


def jbracket(x):
    """<x> = sqrt(1 + x^2)."""
    lib = _lib(x)
    return lib.sqrt(1 + x * x)


def tau_weights(t, r):
    """(tau_minus, tau_plus, tau0) = (<t-r>, <t+r>, ratio)."""
    tm = jbracket(t - r)
    tp = jbracket(t + r)
    return tm, tp, tm / tp


def lapse_ratio(t, r):
    """s/t on the slice through (t, r)."""
    return slice_label(t, r) / t


def cone_weight(t, r):
    """w = 1 - r/t; comparable to (s/t)^2 inside the cone region."""
    return 1 - r / t


def cone_cut_radius(s):
    """Largest r on slice s with r < t - 1, i.e. r = (s^2 - 1)/2."""
    return (s * s - 1) / 2


def classify_domain(t, r):
    """'interior' (r < t/2), 'wave' (t/2 <= r <= t-1), else 'exterior'.

    Scalars only; the split is the interior/wave-zone partition of the
    truncated cone region.
    """
    if r < 0.5 * t:
        return "interior"
    if r <= t - 1:
        return "wave"
    return "exterior"


def in_cone_region(t, r):
    return r < t - 1


# ---------------------------------------------------------------------------
# derivative frames


@dataclass
class FrameDerivatives:
    """First derivatives of one field at one event, in every frame we use.

    du/dr are the Bondi-frame pair (d_u^B phi = d_t phi,
    d_r^B phi = (d_t + d_r) phi); `under_r` is the radial slice-tangent
    derivative d_r + (r/t) d_t; `slash_sq` is the squared tangential
    (angular) gradient, zero in radial mode.  `on_axis` marks r = 0 events,
    where the radial frame degenerates.
    """

    dt: float
    dr: float
    bondi_u: float
    bondi_r: float
    under_r: float
    slash_sq: float
    on_axis: bool


def frame_transform(t, r, dt_phi, dr_phi, grad_sq=None):
    """Build FrameDerivatives from inertial partials at (t, r).

    Radial mode: pass dt_phi and the radial derivative dr_phi.  Cartesian
    mode: additionally pass grad_sq = |grad phi|^2; the tangential part
    |slash phi|^2 = |grad|^2 - (d_r phi)^2 is clamped into [0, inf) with a
    roundoff allowance of SLASH_CLAMP * |grad|^2.
    """
    lib = _lib(t, r, dt_phi, dr_phi)
    on_axis = bool(np.any(np.equal(r, 0))) if lib is np else (r == 0)
    bondi_r = dt_phi + dr_phi
    under_r = dr_phi + (r / t) * dt_phi
    if grad_sq is None:
        slash = 0.0 * dr_phi
    else:
        slash = grad_sq - dr_phi * dr_phi
        scale = lib.where(grad_sq > 0, grad_sq, 1.0) if lib is np else max(grad_sq, 1)
        if lib is np:
            bad = slash < -SLASH_CLAMP * scale
            if np.any(bad):
                raise ValueError("tangential gradient below -clamp: not a gradient decomposition")
            slash = np.maximum(slash, 0.0)
        else:
            if slash < -SLASH_CLAMP * scale:
                raise ValueError("tangential gradient below -clamp")
            slash = slash if slash > 0 else mpmath.mpf(0)
    return FrameDerivatives(
        dt=dt_phi,
        dr=dr_phi,
        bondi_u=dt_phi,
        bondi_r=bondi_r,
        under_r=under_r,
        slash_sq=slash,
        on_axis=on_axis,
    )


def underbar_cartesian(t, x_over_t, dt_phi, di_phi):
    """Slice-tangent Cartesian derivative: d_i phi + (x_i/t) d_t phi."""
    return di_phi + x_over_t * dt_phi


def nprime_split(t, r):
    """Coefficients (alpha, beta) with N' = alpha * d_u^B + beta * d_r^B.

    alpha = 1 - r/t, beta = r/t; both nonnegative inside the cone.
    """
    return 1 - r / t, r / t


def volume_factor(t, r):
    """dVol/dx on the slice (the lapse ratio s/t)."""
    return lapse_ratio(t, r)
