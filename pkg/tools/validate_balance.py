"""Scratch validation of balance.py against the frozen fixtures (not shipped).

Order of business:
  1. power_weighted_coefficients: Simpson reduction at p=0, polynomial
     exactness, singular-weight accuracy vs mpmath, near/far branch seam.
  2. verify_balance on an analytic band of the fixture field, all four
     multiplier kinds, with layer-count convergence + Richardson check.
  3. fit_decay / pointwise_sup / estimate_from_slices quick exactness.
"""

import json
import math
import sys
import time

import numpy as np

sys.path.insert(0, "/root/pkg/src")

import sympy as sp
from mpmath import mp, mpf, quad

from wkgs.balance import (
    BalanceReport,
    DecayFit,
    estimate_from_slices,
    fit_decay,
    layer_values,
    pointwise_sup,
    power_weighted_coefficients,
    verify_balance,
    verify_estimate,
)
from wkgs.energies import sample_slice, simpson_coefficients
from wkgs.multipliers import MultiplierSpec
from wkgs.solver.band import FieldBand
from wkgs.solver.grid import GridSpec

fails = []


def check(label, got, want, tol):
    rel = abs(got - want) / max(abs(want), 1e-300)
    ok = rel <= tol
    print(f"{'OK ' if ok else 'FAIL'} {label}: got={got!r} want={want!r} rel={rel:.3e}")
    if not ok:
        fails.append(label)


def check_abs(label, got, tol):
    ok = abs(got) <= tol
    print(f"{'OK ' if ok else 'FAIL'} {label}: |{got:.3e}| <= {tol:.1e}")
    if not ok:
        fails.append(label)


# --- 1. power-weighted quadrature ---------------------------------------------
print("== power_weighted_coefficients ==")
for m in (5, 9, 41):
    pw = power_weighted_coefficients(m, 0.1, 0.0)
    si = simpson_coefficients(m, 0.1)
    check_abs(f"p=0 == Simpson n={m}", float(np.max(np.abs(pw - si))), 1e-14)

# polynomial exactness: int_0^R r^p (c0 + c1 r + c2 r^2) dr
rng = np.random.default_rng(7)
for p in (-0.5, -0.9, 0.25, 1.0):
    for m in (7, 16, 33, 64):
        h = 0.02
        R = (m - 1) * h
        r = np.arange(m) * h
        c0, c1, c2 = rng.normal(size=3)
        g = c0 + c1 * r + c2 * r * r
        exact = (c0 * R ** (p + 1) / (p + 1) + c1 * R ** (p + 2) / (p + 2)
                 + c2 * R ** (p + 3) / (p + 3))
        got = float(np.sum(power_weighted_coefficients(m, h, p) * g))
        check(f"quadratic exactness p={p} n={m}", got, exact, 5e-13)

# singular-weight accuracy on a transcendental g, including the far branch.
# Reference via the hypergeometric closed form (quadrature-free):
#   int_0^R r^p cos(b r) dr = R^(p+1)/(p+1) 1F2((p+1)/2; 1/2, (p+3)/2; -(bR/2)^2)
mp.dps = 50
for p in (-0.5, -0.75):
    pp = mpf(p)
    exact = float(2 ** (pp + 1) / (pp + 1)
                  * mp.hyp1f2((pp + 1) / 2, mpf(1) / 2, (pp + 3) / 2, -mpf(9)))
    errs = []
    for m in (101, 201, 401, 801):
        h = 2.0 / (m - 1)
        r = np.arange(m) * h
        got = float(np.sum(power_weighted_coefficients(m, h, p) * np.cos(3 * r)))
        errs.append(abs(got - exact))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(3)]
    print(f"p={p}: errs={[f'{e:.2e}' for e in errs]} orders={[f'{o:.2f}' for o in orders]}")
    # the pair rule superconverges (~4); the last step may graze rounding,
    # so only the first two refinements carry an order demand
    if errs[-1] > 1e-9 or min(orders[:2]) < 3.0:
        fails.append(f"singular accuracy p={p}")

# odd cell count goes through the asymmetric cubic tail: plain order 3 there,
# no Simpson-style superconvergence, hence the looser tolerances
for m, tol in ((8, 2e-4), (14, 2e-5), (100, 3e-8)):
    h = 1.0 / (m - 1)
    r = np.arange(m) * h
    got = float(np.sum(power_weighted_coefficients(m, h, -0.5) * (1 + r) ** 3))
    exact = 192.0 / 35.0  # int_0^1 x^(-1/2)(1+x)^3 dx, term by term
    check(f"odd-cell tail n={m}", got, exact, tol)

# --- 2. slab balances vs fixture -----------------------------------------------
print("== verify_balance vs fixture ==")
FIX = json.load(open("/root/pkg/tests/fixtures/balance_fixture.json"))

T_, R_ = sp.symbols("t r", positive=True)
PHI = sp.sin(sp.Rational(7, 10) * T_ + sp.Rational(3, 10)) * (1 - (R_ / sp.Rational(6, 5)) ** 2) ** 8
# stepper-convention forcing (phi_tt = lap phi + F); verify_balance negates
# internally, so the frozen source_term values (computed from box phi = -F)
# must come out unchanged
F_EXPR = sp.cancel(sp.diff(PHI, T_, 2) - sp.diff(PHI, R_, 2) - 2 * sp.diff(PHI, R_) / R_)
phi_fn = sp.lambdify((T_, R_), PHI, modules="numpy")
phit_fn = sp.lambdify((T_, R_), sp.diff(PHI, T_), modules="numpy")
F_fn = sp.lambdify((T_, R_), F_EXPR, modules="numpy")


def chi(r):
    return np.where(r <= 1.2, 1.0, 0.0)


def source(t, r):
    return F_fn(t, np.asarray(r, dtype=float)) * chi(r)


def closed_band(h, dt, extent, t_lo, t_hi):
    n = int(round(extent / h))
    r = np.arange(n + 1) * h
    band = FieldBand("radial", ("phi",), h, dt, (n + 1,), depth=0)
    m = int(math.ceil((t_hi - t_lo) / dt + 1e-9))
    for k in range(m + 1):
        t = t_lo + k * dt
        band.push_slice(t, {"phi": (phi_fn(t, r) * chi(r), phit_fn(t, r) * chi(r))})
    return band


t_start = time.time()
H = 0.001
band = closed_band(H, 0.002, 2.0, 1.95, 2.85)
grid = GridSpec(mode="radial", extent=2.0, n_cells=2000, t0=1.95, t_end=2.85)
print(f"band built: {time.time()-t_start:.1f}s")

SPECS = [("T", 0.0), ("Ka", 0.75), ("Ya", 0.25), ("Kconf", 0.25)]
for kind, a in SPECS:
    fx = FIX[kind]
    spec = MultiplierSpec(kind, a)
    reps = {}
    for n_layers in (250, 500, 1000):
        t0 = time.time()
        reps[n_layers] = verify_balance(
            band, spec, 2.0, 2.5, field="phi", source=source,
            n_layers=n_layers, r_cut=1.2, grid=grid,
        )
        print(f"  {kind} n_layers={n_layers}: {time.time()-t0:.1f}s "
              f"residual={reps[n_layers].residual:.3e}")
    rep = reps[1000]
    check(f"{kind} flux_in", rep.flux_in, fx["flux_s0"], 2e-9)
    check(f"{kind} flux_out", rep.flux_out, fx["flux_s1"], 2e-9)
    # s-integrals carry trapezoid error; Richardson across the two finest
    for name, key in [("source_term", "source"), ("bulk_A", "bulk_A"),
                      ("bulk_C", "bulk_C")]:
        v500 = getattr(reps[500], name)
        v1000 = getattr(reps[1000], name)
        extrap = (4.0 * v1000 - v500) / 3.0
        if fx[key] == 0.0:
            check_abs(f"{kind} {name} (exact zero)", v1000, 1e-12)
        else:
            check(f"{kind} {name} @1000", v1000, fx[key], 5e-6)
            check(f"{kind} {name} Richardson", extrap, fx[key], 2e-8)
            ratio = abs(v500 - extrap) / max(abs(v1000 - extrap), 1e-300)
            print(f"    {kind} {name}: layer-halving ratio {ratio:.2f} (want ~4)")
            if not 3.0 < ratio < 5.5:
                fails.append(f"{kind} {name} trapz order")
    check_abs(f"{kind} residual @1000", rep.residual, 5e-7)
    if kind == "Ya" and rep.bulk_A < -1e-12:
        fails.append("Ya bulk_A sign")

# default layer spacing path + JSON line sanity
rep_auto = verify_balance(band, MultiplierSpec("T", 0.0), 2.0, 2.5,
                          field="phi", source=source, r_cut=1.2, grid=grid)
line = rep_auto.to_json()
parsed = json.loads(line)
print(f"auto layers: n={rep_auto.n_layers}, residual={rep_auto.residual:.3e}, "
      f"json keys={sorted(parsed)[:4]}...")
if parsed["flux_in"] != rep_auto.flux_in:
    fails.append("JSON round-trip")

# zero field -> all entries zero
zband = FieldBand("radial", ("phi",), 0.01, 0.01, (401,), depth=0)
for k in range(120):
    zband.push_slice(1.9 + k * 0.01, {"phi": (np.zeros(401), np.zeros(401))})
zgrid = GridSpec(mode="radial", extent=4.0, n_cells=400, t0=1.9, t_end=3.1)
zrep = verify_balance(zband, MultiplierSpec("Ya", 0.25), 2.0, 2.5,
                      field="phi", n_layers=10, r_cut=1.2, grid=zgrid)
allz = all(
    getattr(zrep, f) == 0.0
    for f in ("flux_in", "flux_out", "bulk_A", "bulk_C", "source_term", "residual")
)
print(f"{'OK ' if allz else 'FAIL'} zero field -> all entries zero")
if not allz:
    fails.append("zero field")

# --- 3. fits, sups, estimates ---------------------------------------------------
print("== fit_decay / pointwise / estimates ==")
s = np.linspace(2, 30, 25)
fit = fit_decay(zip(s, 10.0 * s ** -1.5))
check("fit_decay exact power", fit.exponent, -1.5, 1e-12)
fit2 = fit_decay(zip(s, 7.7e4 * 10.0 * s ** -1.5))
check_abs("fit_decay scale invariance", fit2.exponent - fit.exponent, 1e-12)
const = fit_decay(zip(s, np.ones_like(s)))
check_abs("fit_decay constant series", const.exponent, 1e-14)
try:
    fit_decay(zip(s[:5], s[:5]))
    fails.append("fit_decay min points")
except ValueError as e:
    print(f"OK  fit_decay rejects short series: {e}")
try:
    fit_decay(zip(s, s - 10.0))
    fails.append("fit_decay positivity")
except ValueError as e:
    print(f"OK  fit_decay rejects non-positive: {e}")

sdata = sample_slice(band, 2.2, fields=("phi",), k_max=0, r_cut=1.2,
                     source=source, grid=grid)
val = np.abs(sdata.data["phi"][((0, 0), 0)][0])
tp = np.sqrt(1.0 + (sdata.sample.t + sdata.sample.r) ** 2)
want_sup = float(np.max(np.sqrt(tp) * val))
check("pointwise_sup tau_half", pointwise_sup(sdata, "tau_half", "phi"),
      want_sup, 1e-15)
want_sup3 = float(np.max(tp ** 1.5 * val))
check("pointwise_sup tau_threehalf",
      pointwise_sup(sdata, "tau_threehalf", "phi"), want_sup3, 1e-15)
want_sa = float(np.max(2.2 ** 0.5 * np.sqrt(tp) * val))
check("pointwise_sup s_a_tau_half",
      pointwise_sup(sdata, "s_a_tau_half", "phi", a=0.5), want_sa, 1e-15)

slices = [
    sample_slice(band, ss, fields=("phi",), k_max=0, r_cut=1.2,
                 source=source, grid=grid)
    for ss in (2.0, 2.2, 2.4)
]
rep_est = estimate_from_slices(slices, "est_weight1", 0.5, "phi")
from wkgs.energies import norm_value
e1 = [norm_value("E1a", sd, "phi", a=0.5) for sd in slices]
inc = [norm_value("NWa_increment", sd, "phi", a=0.5) for sd in slices]
want_ratio = max(e1) / (e1[0] + np.trapezoid(inc, [2.0, 2.2, 2.4]))
check("estimate_from_slices est_weight1", rep_est.ratio, want_ratio, 1e-15)
zs = [
    sample_slice(zband, ss, fields=("phi",), k_max=0, r_cut=1.2, grid=zgrid)
    for ss in (2.0, 2.2, 2.4)
]
zrep_est = estimate_from_slices(zs, "energy_est1", 0.0, "phi")
print(f"{'OK ' if zrep_est.degenerate else 'FAIL'} zero field estimate degenerate")
if not zrep_est.degenerate:
    fails.append("estimate degenerate")

ve = verify_estimate(band, "est_weight1", 0.5, (2.0, 2.2, 2.4),
                     field="phi", source=source, r_cut=1.2, grid=grid)
check("verify_estimate == estimate_from_slices", ve.ratio, rep_est.ratio, 1e-15)

print()
print("FAILURES:", fails if fails else "none")
