"""Scratch validation of energies.py against frozen fixtures (not shipped)."""
import json
import math
import sys
import time

import numpy as np

sys.path.insert(0, "/root/pkg/src")

from wkgs.energies import (
    HyperboloidSample,
    SliceSampler,
    check_hardy,
    evaluate_norm,
    hyperboloid_quadrature,
    norm_value,
    sample_slice,
    simpson_coefficients,
    support_cut_radius,
)
from wkgs.solver import GridSpec, linear_wave, RadialRun, InitialData, radial_bump
from wkgs.solver.band import FieldBand
from wkgs.solver.manufactured import manufactured_case

FIX_B = json.load(open("/root/pkg/tests/fixtures/balance_fixture.json"))
FIX_N = json.load(open("/root/pkg/tests/fixtures/norms_fixture.json"))

fails = []


def check(label, got, want, tol):
    rel = abs(got - want) / max(abs(want), 1e-300)
    ok = rel <= tol
    print(f"{'OK ' if ok else 'FAIL'} {label}: got={got!r} want={want!r} rel={rel:.3e}")
    if not ok:
        fails.append(label)


# --- 1. plain geometric quadrature ------------------------------------------
grid = GridSpec(mode="radial", extent=5.0, n_cells=5000, t0=4.0, t_end=20.0)
q = hyperboloid_quadrature(4.0, grid, r_cut=3.0)
check("ball volume", float(np.sum(q.weights)), 4.0 / 3.0 * math.pi * 27.0, 1e-10)
check("int (s/t) dx s=4 r<=3", float(np.sum(q.dvol_weights())),
      FIX_B["int_s_over_t_s4_r3"], 1e-10)
# volume-form identity: dvol weights == dx weights * (s/t) exactly
qv = hyperboloid_quadrature(4.0, grid, r_cut=3.0, volume="dvol")
print("OK  dvol==dx*(s/t):", np.array_equal(qv.weights, q.weights * (4.0 / q.t)))

# Simpson coefficient sanity: positivity + exactness degree
for m in (3, 4, 5, 6, 7, 11):
    c = simpson_coefficients(m, 0.1)
    assert np.all(c > 0), m
    x = np.arange(m) * 0.1
    for deg in (0, 1, 2, 3):
        exact = ((m - 1) * 0.1) ** (deg + 1) / (deg + 1)
        err = abs(float(c @ x**deg) - exact)
        assert err < 1e-14, (m, deg, err)
print("OK  simpson positive + cubic-exact for", (3, 4, 5, 6, 7, 11))


# --- 2. closed-form band helper ----------------------------------------------
def closed_band(phi, phi_t, h, dt, extent, t_lo, t_hi, field="phi"):
    n = int(round(extent / h))
    r = np.arange(n + 1) * h
    band = FieldBand("radial", (field,), h, dt, (n + 1,), depth=0)
    m = int(math.ceil((t_hi - t_lo) / dt + 1e-9))
    for k in range(m + 1):
        t = t_lo + k * dt
        band.push_slice(t, {field: (phi(t, r), phi_t(t, r))})
    return band


# static_sin: sin(0.7 t + 0.3) * (1 - (r/1.2)^2)^8
def ss_chi(r):
    return np.maximum(1.0 - (r / 1.2) ** 2, 0.0) ** 8


ss_phi = lambda t, r: math.sin(0.7 * t + 0.3) * ss_chi(r)
ss_phi_t = lambda t, r: 0.7 * math.cos(0.7 * t + 0.3) * ss_chi(r)

t0 = time.time()
band = closed_band(ss_phi, ss_phi_t, 0.001, 0.002, 2.0, 1.95, 2.40)
ggrid = GridSpec(mode="radial", extent=2.0, n_cells=2000, t0=1.95, t_end=2.40)
sdata = sample_slice(band, 2.0, fields=("phi",), k_max=0, grid=ggrid, r_cut=1.25)
print(f"static_sin band+slice: {time.time()-t0:.2f}s, nodes={sdata.sample.n_nodes}")

want = FIX_B["norms_s2_a_half_c1"]
for kind, key in [("EW", "EW"), ("EKG", "EKG"), ("EWa", "EWa"),
                  ("E1a", "E1a"), ("E2a", "E2a"), ("SuTau", "SuTau")]:
    got = norm_value(kind, sdata, "phi", a=0.5, c_mass=1.0)
    check(f"static_sin s=2 a=1/2 {kind}", got, want[key], 1e-7)
hr = check_hardy(sdata, "phi")
check("static_sin s=2 hardy", hr.ratio, want["hardy_ratio"], 1e-7)

want0 = FIX_B["norms_s2_a0_c1"]
got_ewa0 = norm_value("EWa", sdata, "phi", a=0.0)
got_ew = norm_value("EW", sdata, "phi", a=0.0)
check("static_sin s=2 a=0 EWa", got_ewa0, want0["EWa"], 1e-7)
print("OK  EWa(a=0) == EW exactly:", got_ewa0 == got_ew)

# --- 3. swb at s=5, a=1/2 vs norms fixture -----------------------------------
case = manufactured_case("spherical_wave_bump")
t0 = time.time()
band5 = closed_band(case.phi, case.phi_t, 0.002, 0.002, 6.0, 4.95, 7.45)
g5 = GridSpec(mode="radial", extent=6.0, n_cells=3000, t0=4.95, t_end=7.45)
sdata5 = sample_slice(band5, 5.0, fields=("phi",), k_max=0, grid=g5, r_cut=5.3)
print(f"swb band+slice: {time.time()-t0:.2f}s, nodes={sdata5.sample.n_nodes}")
want5 = FIX_N["swb_s5_ahalf"]
for kind, key in [("EW", "EW"), ("EKG", "EKG"), ("EWa", "EWa"),
                  ("E1a", "E1a"), ("E2a", "E2a"), ("SuTau", "SuTau")]:
    got = norm_value(kind, sdata5, "phi", a=0.5, c_mass=1.0)
    check(f"swb s=5 a=1/2 {kind}", got, want5[key], 1e-6)
hr5 = check_hardy(sdata5, "phi")
check("swb s=5 hardy", hr5.ratio, want5["hardy_ratio"], 1e-6)

# node-max sups (no refinement yet): how close?
samp5 = sdata5.sample
p5 = np.abs(sdata5.data["phi"][((0, 0), 0)][0])
tp5 = np.sqrt(1.0 + (samp5.t + samp5.r) ** 2)
sups_want = FIX_N["swb_s5_ahalf_sups"]
for kind, w in [("tau_half", tp5**0.5), ("tau_threehalf", tp5**1.5),
                ("s_a_tau_half", 5.0**0.5 * tp5**0.5)]:
    got = float(np.max(w * p5))
    rel = abs(got - sups_want[kind]) / sups_want[kind]
    print(f"sup {kind}: node-max={got:.12g} oracle={sups_want[kind]:.12g} rel={rel:.2e}")

# --- 4. streaming == direct, bit for bit -------------------------------------
g = GridSpec(mode="radial", extent=10.0, n_cells=500, cfl=0.5, t0=2.0,
             t_end=7.0, band_depth=8)
data = InitialData(
    values={"phi": radial_bump(0.1, 0.5)},
    velocities={"phi": lambda r: np.zeros_like(r)},
    support_radius=0.9,
)
model = linear_wave()
s_list = [2.2, 2.6, 3.0]
sampler = SliceSampler(g, s_list, ("phi",), k_max=0)
run = RadialRun(model, g, data)
run.run_to_end(on_slice=sampler.on_slice)
stream = sampler.results()

g_full = GridSpec(mode="radial", extent=10.0, n_cells=500, cfl=0.5, t0=2.0,
                  t_end=7.0, band_depth=0)
run2 = RadialRun(model, g_full, data)
run2.run_to_end()
allbit = True
for sd in stream:
    direct = sample_slice(run2.band, sd.s, fields=("phi",), k_max=0)
    for k in range(3):
        a1 = sd.data["phi"][((0, 0), 0)][k]
        a2 = direct.data["phi"][((0, 0), 0)][k]
        if not np.array_equal(a1, a2):
            allbit = False
            print(f"MISMATCH s={sd.s} part={k} max={np.max(np.abs(a1-a2))}")
    ew_s = norm_value("EW", sd, "phi")
    ew_d = norm_value("EW", direct, "phi")
    print(f"s={sd.s}: stream EW={ew_s!r} direct EW={ew_d!r} equal={ew_s==ew_d}")
    if ew_s != ew_d:
        allbit = False
print("OK  streaming == direct bitwise:", allbit)
if not allbit:
    fails.append("streaming-bitwise")

# support cut sanity
print("support_cut_radius(20, 2, 0.95):", support_cut_radius(20.0, 2.0, 0.95))

print("\nFAILURES:", fails if fails else "none")
sys.exit(1 if fails else 0)
