"""Manufactured solutions with closed-form fields, partials and forcings.

The closed forms (and the float64 regression samples consumed by the
tests) were frozen by an independent sympy oracle; conventions:

    wave:  phi_tt = lap phi + forcing
    KG:    v_tt   = lap v - c^2 v + forcing

so forcing is *minus* the d'Alembertian defect.  All evaluators broadcast
over numpy arrays, and every (2/r)-looking factor is implemented in a form
that is finite on the axis.
"""

from dataclasses import dataclass

import numpy as np

KINDS = ("spherical_wave_bump", "kg_modulated_bump", "wave_with_polynomial_source")


# --- C-infinity bump on (2,3), used by the spherical wave -----------------


def _bump(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 2.0) & (x < 3.0)
    g = np.where(inside, (x - 2.0) * (3.0 - x), 1.0)
    with np.errstate(under="ignore"):
        return np.where(inside, np.exp(-1.0 / g), 0.0)


def _bump_d1(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 2.0) & (x < 3.0)
    g = np.where(inside, (x - 2.0) * (3.0 - x), 1.0)
    with np.errstate(under="ignore"):
        return np.where(inside, np.exp(-1.0 / g) * (5.0 - 2.0 * x) / (g * g), 0.0)


def _bump_d2(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 2.0) & (x < 3.0)
    g = np.where(inside, (x - 2.0) * (3.0 - x), 1.0)
    gp = 5.0 - 2.0 * x
    with np.errstate(under="ignore"):
        f = np.where(inside, np.exp(-1.0 / g), 0.0)
    return f * (gp * gp / (g ** 4) - 2.0 / (g * g) - 2.0 * gp * gp / (g ** 3))


# --- compactly supported radial profile (1-(r/rho)^2)^8 -------------------


def _chi(r, rho):
    r = np.asarray(r, dtype=float)
    y = np.maximum(1.0 - (r / rho) ** 2, 0.0)
    return y ** 8


def _chi_d1(r, rho):
    r = np.asarray(r, dtype=float)
    y = np.maximum(1.0 - (r / rho) ** 2, 0.0)
    return -16.0 * r / rho ** 2 * y ** 7


def _chi_d1_over_r(r, rho):
    # chi'/r without the axis division
    r = np.asarray(r, dtype=float)
    y = np.maximum(1.0 - (r / rho) ** 2, 0.0)
    return -16.0 / rho ** 2 * y ** 7


def _chi_d2(r, rho):
    r = np.asarray(r, dtype=float)
    y = np.maximum(1.0 - (r / rho) ** 2, 0.0)
    return -16.0 / rho ** 2 * y ** 7 + 224.0 * r ** 2 / rho ** 4 * y ** 6


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    eq: str                      # "wave" | "kg"
    c: float                     # KG mass (unused for wave cases)
    phi: callable
    phi_t: callable
    phi_r: callable
    forcing: callable            # f(t, r); None means identically zero
    support_radius: callable     # r bound of the support at time t


def _spherical_wave_bump():
    # psi = f(t-r) - f(t+r), phi = psi/r; exact homogeneous solution
    def phi(t, r):
        t, r = np.asarray(t, dtype=float), np.asarray(r, dtype=float)
        out = np.where(
            r > 1e-12,
            (_bump(t - r) - _bump(t + r)) / np.where(r > 1e-12, r, 1.0),
            -2.0 * _bump_d1(t),
        )
        return out

    def phi_t(t, r):
        t, r = np.asarray(t, dtype=float), np.asarray(r, dtype=float)
        return np.where(
            r > 1e-12,
            (_bump_d1(t - r) - _bump_d1(t + r)) / np.where(r > 1e-12, r, 1.0),
            -2.0 * _bump_d2(t),
        )

    def phi_r(t, r):
        t, r = np.asarray(t, dtype=float), np.asarray(r, dtype=float)
        rs = np.where(r > 1e-12, r, 1.0)
        return np.where(
            r > 1e-12,
            (-_bump_d1(t - r) - _bump_d1(t + r)) / rs - (_bump(t - r) - _bump(t + r)) / rs ** 2,
            0.0,
        )

    return ManufacturedCase(
        name="spherical_wave_bump",
        eq="wave",
        c=1.0,
        phi=phi,
        phi_t=phi_t,
        phi_r=phi_r,
        forcing=None,
        support_radius=lambda t: max(float(t) - 2.0, 3.0 - float(t), 0.0),
    )


def _kg_modulated_bump(rho=1.2, c=1.0):
    def v(t, r):
        return np.exp(-np.asarray(t, dtype=float)) * _chi(r, rho)

    def v_t(t, r):
        return -v(t, r)

    def v_r(t, r):
        return np.exp(-np.asarray(t, dtype=float)) * _chi_d1(r, rho)

    def forcing(t, r):
        return np.exp(-np.asarray(t, dtype=float)) * (
            (1.0 + c * c) * _chi(r, rho) - _chi_d2(r, rho) - 2.0 * _chi_d1_over_r(r, rho)
        )

    return ManufacturedCase(
        name="kg_modulated_bump",
        eq="kg",
        c=c,
        phi=v,
        phi_t=v_t,
        phi_r=v_r,
        forcing=forcing,
        support_radius=lambda t: rho,
    )


def _wave_with_polynomial_source(rho=2.4):
    def phi(t, r):
        t, r = np.asarray(t, dtype=float), np.asarray(r, dtype=float)
        return (t * t - r * r) * _chi(r, rho)

    def phi_t(t, r):
        t, r = np.asarray(t, dtype=float), np.asarray(r, dtype=float)
        return 2.0 * t * _chi(r, rho)

    def phi_r(t, r):
        t, r = np.asarray(t, dtype=float), np.asarray(r, dtype=float)
        return -2.0 * r * _chi(r, rho) + (t * t - r * r) * _chi_d1(r, rho)

    def forcing(t, r):
        t, r = np.asarray(t, dtype=float), np.asarray(r, dtype=float)
        return (
            8.0 * _chi(r, rho)
            + 4.0 * r * _chi_d1(r, rho)
            - (t * t - r * r) * (_chi_d2(r, rho) + 2.0 * _chi_d1_over_r(r, rho))
        )

    return ManufacturedCase(
        name="wave_with_polynomial_source",
        eq="wave",
        c=1.0,
        phi=phi,
        phi_t=phi_t,
        phi_r=phi_r,
        forcing=forcing,
        support_radius=lambda t: rho,
    )


_REGISTRY = {
    "spherical_wave_bump": _spherical_wave_bump,
    "kg_modulated_bump": _kg_modulated_bump,
    "wave_with_polynomial_source": _wave_with_polynomial_source,
}


def manufactured_case(kind):
    """Exact field / partials / forcing for a named manufactured case."""
    try:
        factory = _REGISTRY[kind]
    except KeyError:
        raise ValueError(f"unknown manufactured case {kind!r}") from None
    return factory()
