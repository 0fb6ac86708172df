import json
import math
import os

import numpy as np
import pytest

from wkgs.solver.band import FieldBand
from wkgs.solver.grid import GridSpec
from wkgs.solver.manufactured import manufactured_case

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def load_fixture(name):
    with open(os.path.join(FIXTURES, name)) as fh:
        return json.load(fh)


def closed_band(phi, phi_t, h, dt, extent, t_lo, t_hi, field="phi"):
    """Band filled with exact traces of a closed-form field (no stepping)."""
    n = int(round(extent / h))
    r = np.arange(n + 1) * h
    band = FieldBand("radial", (field,), h, dt, (n + 1,), depth=0)
    m = int(math.ceil((t_hi - t_lo) / dt + 1e-9))
    for k in range(m + 1):
        t = t_lo + k * dt
        band.push_slice(t, {field: (phi(t, r), phi_t(t, r))})
    return band


def rel(got, want):
    return abs(got - want) / max(abs(want), 1e-300)


# --- shared analytic bands (built once; cheap but not free) -------------------


def _static_sin():
    chi = lambda r: np.maximum(1.0 - (r / 1.2) ** 2, 0.0) ** 8
    phi = lambda t, r: math.sin(0.7 * t + 0.3) * chi(r)
    phi_t = lambda t, r: 0.7 * math.cos(0.7 * t + 0.3) * chi(r)
    return phi, phi_t


@pytest.fixture(scope="session")
def static_band():
    """sin(0.7t+0.3)*(1-(r/1.2)^2)^8 on t in [1.95, 2.85] — the balance-fixture
    field.  Support r <= 1.2 sits inside every cone cut used below."""
    phi, phi_t = _static_sin()
    band = closed_band(phi, phi_t, 0.001, 0.002, 2.0, 1.95, 2.85)
    grid = GridSpec(mode="radial", extent=2.0, n_cells=2000, t0=1.95, t_end=2.85)
    return band, grid


@pytest.fixture(scope="session")
def swb_band():
    """Exact spherical_wave_bump traces around s = 5 (norms-fixture rows)."""
    case = manufactured_case("spherical_wave_bump")
    band = closed_band(case.phi, case.phi_t, 0.002, 0.002, 6.0, 4.95, 7.45)
    grid = GridSpec(mode="radial", extent=6.0, n_cells=3000, t0=4.95, t_end=7.45)
    return band, grid
