import math
import os

import numpy as np
import pytest

from wkgs.solver.band import (
    BandCoverageError,
    FieldBand,
    SnapshotFormatError,
    commuted_field,
    operator_terms,
    read_snapshot,
    write_snapshot,
)
from wkgs.solver.grid import GridSpec
from wkgs.solver.manufactured import manufactured_case
from wkgs.solver.models import ModelParams, coupled, klein_gordon, linear_wave
from wkgs.solver.radial import (
    NumericalAbort,
    SupportEscapeError,
    InitialData,
    case_data,
    evolve,
    outgoing_shell,
    radial_bump,
    zero_data,
)

from conftest import closed_band, load_fixture

SRC = load_fixture("source_fixture.json")


# --- manufactured cases against frozen traces -------------------------------------


def test_manufactured_traces_match_frozen_samples():
    case = manufactured_case("spherical_wave_bump")
    for row in SRC["spherical_wave_bump"]["samples"]:
        assert abs(float(case.phi(row["t"], row["r"])) - row["phi"]) <= 1e-16
        assert abs(float(case.phi_t(row["t"], row["r"])) - row["phi_t"]) <= 1e-16
        assert abs(float(case.phi_r(row["t"], row["r"])) - row["phi_r"]) <= 1e-16
    kg = manufactured_case("kg_modulated_bump")
    for row in SRC["kg_modulated_bump"]["samples"]:
        assert abs(float(kg.phi(row["t"], row["r"])) - row["v"]) <= 1e-15
        assert abs(float(kg.phi_t(row["t"], row["r"])) - row["v_t"]) <= 1e-15
        assert abs(float(kg.forcing(row["t"], row["r"])) - row["forcing"]) <= 1e-13
    poly = manufactured_case("wave_with_polynomial_source")
    for row in SRC["wave_with_polynomial_source"]["samples"]:
        assert abs(float(poly.phi(row["t"], row["r"])) - row["phi"]) <= 1e-12
        assert abs(float(poly.phi_t(row["t"], row["r"])) - row["phi_t"]) <= 1e-12
        assert abs(float(poly.forcing(row["t"], row["r"])) - row["forcing"]) <= 1e-11


def test_manufactured_partials_are_consistent():
    # closed-form partials against central differences of the closed-form value
    eps = 1e-5
    pts = [(4.1, 1.3), (4.9, 0.4), (6.0, 3.2)]
    for kind in ("spherical_wave_bump", "kg_modulated_bump",
                 "wave_with_polynomial_source"):
        case = manufactured_case(kind)
        for t, r in pts:
            fd_t = (case.phi(t + eps, r) - case.phi(t - eps, r)) / (2 * eps)
            fd_r = (case.phi(t, r + eps) - case.phi(t, r - eps)) / (2 * eps)
            sc = max(abs(float(case.phi(t, r))), 1e-3)
            assert abs(float(case.phi_t(t, r)) - fd_t) <= 2e-7 * sc + 1e-9
            assert abs(float(case.phi_r(t, r)) - fd_r) <= 2e-7 * sc + 1e-9


def test_forcing_convention_closes_the_equation():
    # v_tt - lap v + c^2 v == forcing, all by finite differences of the
    # closed form; pins the sign convention the steppers rely on
    kg = manufactured_case("kg_modulated_bump")
    eps = 1e-4
    for t, r in ((2.5, 0.5), (3.1, 0.9)):
        v_tt = (kg.phi(t + eps, r) - 2 * kg.phi(t, r) + kg.phi(t - eps, r)) / eps ** 2
        v_rr = (kg.phi(t, r + eps) - 2 * kg.phi(t, r) + kg.phi(t, r - eps)) / eps ** 2
        v_r = (kg.phi(t, r + eps) - kg.phi(t, r - eps)) / (2 * eps)
        lap = v_rr + 2 * v_r / r
        resid = float(v_tt - lap + kg.c ** 2 * kg.phi(t, r) - kg.forcing(t, r))
        assert abs(resid) <= 1e-5


def test_unknown_case_rejected():
    with pytest.raises(ValueError):
        manufactured_case("plane_wave")


# --- radial evolution: exact-solution errors ---------------------------------------


def _final_linf_error(kind, model, n, t0, t_end, extent):
    case = manufactured_case(kind)
    grid = GridSpec(mode="radial", extent=extent, n_cells=n, cfl=0.5,
                    t0=t0, t_end=t_end)
    run = evolve(model, grid, case_data(case, t0))
    run.run_to_end()
    field = run.fields[0]
    got = run.band.frame(field, run.t)
    want = case.phi(run.t, run.r)
    return float(np.max(np.abs(got - want)))


def test_free_spherical_wave_is_second_order():
    errs = [
        _final_linf_error("spherical_wave_bump", linear_wave(), n,
                          t0=4.0, t_end=6.0, extent=6.0)
        for n in (300, 600)
    ]
    ratio = errs[0] / errs[1]
    assert errs[0] < 2e-3
    assert 3.0 <= ratio <= 5.5, errs


def test_forced_wave_is_second_order():
    model = linear_wave(source="wave_with_polynomial_source")
    errs = [
        _final_linf_error("wave_with_polynomial_source", model, n,
                          t0=4.0, t_end=5.0, extent=6.0)
        for n in (300, 600)
    ]
    ratio = errs[0] / errs[1]
    assert errs[0] < 2e-2
    assert 3.0 <= ratio <= 5.5, errs


def test_forced_kg_is_second_order():
    model = klein_gordon(source="kg_modulated_bump", c_mass=1.0)
    errs = [
        _final_linf_error("kg_modulated_bump", model, n,
                          t0=2.5, t_end=3.5, extent=5.0)
        for n in (250, 500)
    ]
    ratio = errs[0] / errs[1]
    assert errs[0] < 1e-4
    assert 3.0 <= ratio <= 5.5, errs


def test_zero_data_stays_exactly_zero():
    grid = GridSpec(mode="radial", extent=8.0, n_cells=100, cfl=0.5,
                    t0=3.0, t_end=4.0)
    run = evolve(linear_wave(), grid, zero_data(("phi",)))
    run.run_to_end()
    vals, vels = run.band._stacked("phi")
    assert np.all(vals == 0.0)
    assert np.all(vels == 0.0)


def test_decoupled_system_reproduces_plain_kg_bitwise():
    # all coupling constants zero: u stays identically zero and the v lane
    # must execute the same float ops as the standalone KG stepper
    params = ModelParams(P00=0.0, Piso=0.0, R_coupling=0.0, H00=0.0, Hiso=0.0,
                         c_mass=1.0)
    grid = GridSpec(mode="radial", extent=6.0, n_cells=200, cfl=0.5,
                    t0=2.5, t_end=3.2)
    bump = radial_bump(0.1, 1.2)
    vel = radial_bump(-0.05, 1.2, power=9)
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    data_c = InitialData({"u": zero, "v": bump}, {"u": zero, "v": vel}, 1.2)
    data_k = InitialData({"v": bump}, {"v": vel}, 1.2)
    run_c = evolve(coupled(params), grid, data_c)
    run_c.run_to_end()
    run_k = evolve(klein_gordon(c_mass=1.0), grid, data_k)
    run_k.run_to_end()
    uc, _ = run_c.band._stacked("u")
    assert np.all(uc == 0.0)
    vc, wc = run_c.band._stacked("v")
    vk, wk = run_k.band._stacked("v")
    assert np.array_equal(vc, vk)
    assert np.array_equal(wc, wk)


def test_support_guards():
    with pytest.raises(ValueError):
        # support radius 2.5 > t0 - 1.05
        evolve(linear_wave(),
               GridSpec(mode="radial", extent=10.0, n_cells=100, t0=3.0,
                        t_end=4.0),
               zero_data(("phi",), support_radius=2.5))
    with pytest.raises(SupportEscapeError):
        evolve(linear_wave(),
               GridSpec(mode="radial", extent=4.0, n_cells=100, t0=3.0,
                        t_end=6.0),
               zero_data(("phi",), support_radius=1.5))


def test_quasilinear_regime_guard():
    params = ModelParams(H00=1.0)
    grid = GridSpec(mode="radial", extent=8.0, n_cells=100, cfl=0.5,
                    t0=3.0, t_end=4.0)
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    data = InitialData({"u": radial_bump(10.0, 1.5), "v": radial_bump(0.1, 1.5)},
                       {"u": zero, "v": zero}, 1.5)
    with pytest.raises(NumericalAbort):
        evolve(coupled(params), grid, data)


def test_outgoing_shell_profile():
    val, vel, sup = outgoing_shell(2.0, 1.2, 2.0, t0=24.0)
    assert sup == 24.0 - 1.2
    r = np.linspace(0.0, 30.0, 4001)
    v = val(r)
    inside = (r > 24.0 - 2.0) & (r < 24.0 - 1.2)
    assert np.all(v[~inside] == 0.0)
    assert np.max(np.abs(v)) > 0.0
    with pytest.raises(ValueError):
        outgoing_shell(1.0, 0.5, 2.0, t0=3.0)
    with pytest.raises(ValueError):
        outgoing_shell(1.0, 2.0, 1.2, t0=24.0)


# --- band sampling ------------------------------------------------------------------


def _sin_band(depth=0):
    om = 0.7
    phi = lambda t, r: np.sin(om * t + 0.3) * np.exp(-r * r)
    phi_t = lambda t, r: om * np.cos(om * t + 0.3) * np.exp(-r * r)
    return closed_band(phi, phi_t, h=0.05, dt=0.01, extent=2.0,
                       t_lo=2.0, t_hi=2.2), om


def test_band_time_interpolation_orders():
    band, om = _sin_band()
    t, j = 2.093, 7
    r = j * band.h
    env = math.exp(-r * r)
    got0 = band.sample("phi", t, r)
    got1 = band.sample("phi", t, r, dt_order=1)
    got2 = band.sample("phi", t, r, dt_order=2)
    assert abs(got0 - math.sin(om * t + 0.3) * env) <= 1e-9
    assert abs(got1 - om * math.cos(om * t + 0.3) * env) <= 1e-9
    assert abs(got2 - (-om * om) * math.sin(om * t + 0.3) * env) <= 1e-6
    # stored slices are reproduced at node times (to roundoff of the weights)
    k = 5
    t_node = band.times[k]
    assert abs(band.sample("phi", t_node, r)
               - band._values["phi"][k][j]) <= 1e-15
    assert abs(band.sample("phi", t_node, r, dt_order=1)
               - band._velocities["phi"][k][j]) <= 1e-15


def test_band_spatial_derivative_and_reflection():
    band, om = _sin_band()
    t = 2.1
    amp = math.sin(om * t + 0.3)
    # interior: d_r of sin(..)*exp(-r^2) = -2 r amp exp(-r^2)
    r = 10 * band.h
    got = band.sample("phi", t, r, dx_order=1)
    assert abs(got - (-2 * r * amp * math.exp(-r * r))) <= 1e-4
    # the field is even, so the axis derivative must vanish by reflection
    assert abs(band.sample("phi", t, 0.0, dx_order=1)) <= 1e-12


def test_band_sliding_window_matches_keep_all():
    full, om = _sin_band()
    slid = closed_band(
        lambda t, r: np.sin(om * t + 0.3) * np.exp(-r * r),
        lambda t, r: om * np.cos(om * t + 0.3) * np.exp(-r * r),
        h=0.05, dt=0.01, extent=2.0, t_lo=2.0, t_hi=2.2,
    )
    # re-push into a depth-6 band
    window = FieldBand("radial", ("phi",), 0.05, 0.01, full.shape, depth=6)
    for k, t in enumerate(full.times):
        window.push_slice(t, {"phi": (full._values["phi"][k],
                                      full._velocities["phi"][k])})
    t_query = float(window.times[-2]) - 0.003
    a = full.sample("phi", t_query, 0.35, dt_order=1)
    b = window.sample("phi", t_query, 0.35, dt_order=1)
    assert a == b  # bit-identical despite the slid origin
    assert window.covers(t_query)
    assert not window.covers(2.0)
    with pytest.raises(BandCoverageError):
        window.sample("phi", 2.0, 0.35)
    del slid


def test_band_push_validation():
    band = FieldBand("radial", ("phi",), 0.1, 0.05, (11,))
    z = np.zeros(11)
    band.push_slice(1.0, {"phi": (z, z)})
    with pytest.raises(ValueError):
        band.push_slice(1.2, {"phi": (z, z)})  # breaks uniform dt
    with pytest.raises(ValueError):
        band.push_slice(1.05, {"phi": (np.zeros(7), np.zeros(7))})
    with pytest.raises(ValueError):
        FieldBand("radial", ("phi",), 0.1, 0.05, (11,), depth=2)
    with pytest.raises(ValueError):
        FieldBand("polar", ("phi",), 0.1, 0.05, (11,))


def test_band_stencil_edge_guard():
    band, _ = _sin_band()
    n_max = band.shape[0] - 1
    with pytest.raises(BandCoverageError):
        band.sample_many("phi", [2.1], [n_max], dx_order=1)


# --- commuted words ----------------------------------------------------------------


def test_operator_terms_single_boost():
    # L = t d_r + r d_t
    assert operator_terms((0, 0), 1) == {
        (0, 1): {(1, 0): 1.0},
        (1, 0): {(0, 1): 1.0},
    }
    assert operator_terms((1, 0), 0) == {(1, 0): {(0, 0): 1.0}}
    with pytest.raises(ValueError):
        operator_terms((-1, 0), 0)


def test_commuted_boost_annihilates_the_slice_label():
    # phi = t^2 - r^2 is constant along the boost flow: L phi = 0
    band = closed_band(lambda t, r: t * t - r * r,
                       lambda t, r: 2.0 * t + 0.0 * r,
                       h=0.05, dt=0.01, extent=2.0, t_lo=2.0, t_hi=2.2)
    for t, x in ((2.08, 0.5), (2.12, 1.0), (2.1, 0.0)):
        got = commuted_field(band, "phi", (0, 0), 1, t, x)
        assert abs(got) <= 1e-9
    # and the double boost too (quadratics are exact through the stencils)
    assert abs(commuted_field(band, "phi", (0, 0), 2, 2.1, 0.5)) <= 1e-7


def test_commuted_boost_reflects_retarded_time():
    # phi = t - r: L phi = r - t = -phi
    band = closed_band(lambda t, r: t - r,
                       lambda t, r: 1.0 + 0.0 * r,
                       h=0.05, dt=0.01, extent=2.0, t_lo=2.0, t_hi=2.2)
    t, x = 2.1, 0.75
    got = commuted_field(band, "phi", (0, 0), 1, t, x)
    assert abs(got - (x - t)) <= 1e-10
    # mixed word: d_t L phi = d_t(r - t) = -1
    got2 = commuted_field(band, "phi", (1, 0), 1, t, x)
    assert abs(got2 + 1.0) <= 1e-8


def test_commuted_word_guards():
    band, _ = _sin_band()
    with pytest.raises(ValueError):
        commuted_field(band, "phi", (2, 1), 0, 2.1, 0.5)  # |I|+J > k_max
    with pytest.raises(ValueError):
        commuted_field(band, "phi", (0, 0), 1, 2.1, 0.512)  # off-node x
    assert (
        commuted_field(band, "phi", (2, 1), 0, 2.1, 0.5, k_max=3) is not None
    )


# --- snapshots ----------------------------------------------------------------------


def test_snapshot_roundtrip_is_bit_exact(tmp_path, swb_band):
    band, _ = swb_band
    p1 = tmp_path / "a.wkgs"
    p2 = tmp_path / "b.wkgs"
    write_snapshot(band, p1)
    loaded = read_snapshot(p1)
    write_snapshot(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert loaded.meta == band.meta
    assert np.array_equal(loaded.times, band.times)
    t = float(band.times[3]) + 0.37 * band.dt
    assert loaded.sample("phi", t, 1.234) == band.sample("phi", t, 1.234)


def test_snapshot_format_guards(tmp_path, swb_band):
    band, _ = swb_band
    p = tmp_path / "snap.wkgs"
    write_snapshot(band, p)
    raw = bytearray(p.read_bytes())

    bad_magic = tmp_path / "m.wkgs"
    bad_magic.write_bytes(b"XKGS" + bytes(raw[4:]))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(bad_magic)

    bad_version = tmp_path / "v.wkgs"
    bumped = bytearray(raw)
    bumped[4] = raw[4] + 1
    bad_version.write_bytes(bytes(bumped))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(bad_version)

    truncated = tmp_path / "t.wkgs"
    truncated.write_bytes(bytes(raw[: len(raw) // 2]))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(truncated)


# --- 3d mode smoke -----------------------------------------------------------------


def test_cartesian3d_zero_data_and_radial_agreement():
    grid = GridSpec(mode="cartesian3d", extent=4.0, n_cells=24, cfl=0.4,
                    t0=3.0, t_end=3.5)
    run = evolve(linear_wave(), grid, zero_data(("phi",)))
    run.run_to_end()
    assert float(np.max(np.abs(run.band.frame("phi", run.t)))) == 0.0

    # coarse free-wave box runs against a fine radial reference: the box
    # laplacian is 2nd order, so the line error must shrink ~4x per halving
    data = lambda: InitialData({"phi": radial_bump(1.0, 1.5)},
                               {"phi": radial_bump(0.3, 1.5, power=9)}, 1.5)
    gridr = GridSpec(mode="radial", extent=6.0, n_cells=1200, cfl=0.45,
                     t0=3.0, t_end=3.6, band_depth=0)
    runr = evolve(linear_wave(), gridr, data())
    runr.run_to_end()

    def line_error(n):
        g3 = GridSpec(mode="cartesian3d", extent=4.0, n_cells=n, cfl=0.4,
                      t0=3.0, t_end=3.5)
        run3 = evolve(linear_wave(), g3, data())
        run3.run_to_end()
        frame = run3.band.frame("phi", run3.t)
        m = n // 2
        axis = -g3.extent + (np.arange(n) + 0.5) * g3.h
        radii = np.sqrt(axis ** 2 + 2 * axis[m] ** 2)
        want = np.array([runr.band.sample("phi", run3.t, rr) for rr in radii])
        return float(np.max(np.abs(frame[:, m, m] - want)))

    errs = [line_error(24), line_error(48)]
    assert errs[0] < 0.06
    assert 2.8 <= errs[0] / errs[1] <= 6.0, errs
