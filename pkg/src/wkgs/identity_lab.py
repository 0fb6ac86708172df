"""Randomized pointwise verification of the closed-form tensor identities.

Five checks, each comparing two independent evaluation routes of the same
object on random points of the truncated cone region:

  deformation-closed-vs-generic   per-family closed deformation coefficients
                                  against the generic FD assembly
  flux-density-two-forms          the explicit slice flux quadratic form
                                  against its energy-tensor contraction,
                                  plus the coercive envelope ordering
  conformal-potential-cancellation  the conjugation potential's analytic
                                  pieces cancel to zero for both weights
  conjugation-identities          product-rule identities for (1/W) d(W phi)
                                  on random polynomial fields with exact
                                  partials (W = r and W = s^2), including
                                  the combined weighted-derivative identity
  weight-sign-lemma               sign pattern, ratio bounds and concavity
                                  of the scalar weight q(a; u, ubar)

Sampling: s log-uniform on [1.1, 1e3], cone fraction r/(t-1) uniform on
[2e-5, 1) — the lower cutoff keeps r-weighted formulas clear of the axis
tube.  Given (seed, samples, precision) every check is bit-deterministic,
and the work is split into fixed chunks so the WKGS_THREADS setting cannot
change any result.

precision='f64' runs vectorized binary64; precision='extended' reruns the
same identities in 40-digit arithmetic at dyadic-rational points with
a restricted to {0, 1/4, 1/2, 3/4, 1}, where the residuals must reach the
much smaller extended tolerance.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from mpmath import mp, mpf

from . import multipliers as mult
from ._reduce import chunked_map, fixed_chunks

DEFAULT_TOL = {"f64": 1e-10, "extended": 1e-25}
_EXT_DPS = 40
_EXT_A = (0.0, 0.25, 0.5, 0.75, 1.0)
_FLOOR = 1e-300

CHECK_IDS = (
    "deformation-closed-vs-generic",
    "flux-density-two-forms",
    "conformal-potential-cancellation",
    "conjugation-identities",
    "weight-sign-lemma",
)


@dataclass
class IdentityReport:
    identity_id: str
    samples: int
    max_abs_residual: float
    max_rel_residual: float
    tolerance: float
    verdict: str
    seed: int

    def to_json_line(self):
        return json.dumps(
            {
                "identity_id": self.identity_id,
                "samples": self.samples,
                "max_abs_residual": self.max_abs_residual,
                "max_rel_residual": self.max_rel_residual,
                "tolerance": self.tolerance,
                "verdict": self.verdict,
                "seed": self.seed,
            }
        )


def _report(identity_id, samples, abs_res, rel_res, tol, seed):
    return IdentityReport(
        identity_id=identity_id,
        samples=int(samples),
        max_abs_residual=float(abs_res),
        max_rel_residual=float(rel_res),
        tolerance=float(tol),
        verdict="pass" if rel_res <= tol else "fail",
        seed=int(seed),
    )


def sample_cone_points(n, seed, dyadic=False):
    """(t, r) arrays inside the truncated cone; dyadic snaps to 2^-20."""
    rng = np.random.default_rng(seed)
    s = 10.0 ** rng.uniform(math.log10(1.1), 3.0, n)
    y = rng.uniform(2e-5, 1.0, n)
    t = (-y * y + np.sqrt(y * y + s * s * (1 - y * y))) / (1 - y * y)
    r = y * (t - 1)
    if dyadic:
        q = 2.0 ** 20
        t = np.round(t * q) / q
        r = np.round(r * q) / q
        r = np.minimum(r, np.floor((t - 1) * q - 16) / q)  # keep r < t-1
        r = np.maximum(r, 16 / q)
    return t, r


# ---------------------------------------------------------------------------
# 1. deformation coefficients


def _deformation_cell_f64(kind, a, t, r):
    u = t - r
    closed = mult.closed_coefficients(kind, a, u, r)
    generic, scales = mult.generic_coefficients(kind, a, u, r, with_scales=True)
    worst_abs, worst_rel = 0.0, 0.0
    for name in ("auu", "aur", "arr", "abc_scalar"):
        c = np.asarray(getattr(closed, name), dtype=float)
        g = np.asarray(getattr(generic, name), dtype=float)
        sc = np.asarray(getattr(scales, name), dtype=float)
        d = np.abs(c - g)
        worst_abs = max(worst_abs, float(d.max(initial=0.0)))
        rel = d / np.maximum(np.maximum(sc, np.abs(c)), _FLOOR)
        worst_rel = max(worst_rel, float(rel.max(initial=0.0)))
    return worst_abs, worst_rel


def _deformation_cell_ext(kind, a, t, r):
    worst_abs, worst_rel = mpf(0), mpf(0)
    am = mpf(a)
    for tk, rk in zip(t, r):
        um, rm = mpf(tk) - mpf(rk), mpf(rk)
        closed = mult.closed_coefficients(kind, am, um, rm)
        # power-of-two step: with dyadic sample points the polynomial
        # families (T, Kconf) evaluate exactly through the stencil, so
        # their residual is exactly zero rather than merely tiny
        generic, scales = mult.generic_coefficients(
            kind, am, um, rm, rel_step=2.0 ** -25, with_scales=True
        )
        for name in ("auu", "aur", "arr", "abc_scalar"):
            d = abs(getattr(closed, name) - getattr(generic, name))
            sc = max(getattr(scales, name), abs(getattr(closed, name)), mpf(_FLOOR))
            worst_abs = max(worst_abs, d)
            worst_rel = max(worst_rel, d / sc)
    return float(worst_abs), float(worst_rel)


def check_deformation_identity(samples=10000, seed=2026, tol=None, precision="f64"):
    """Closed deformation coefficients == generic FD assembly, all families."""
    tol = DEFAULT_TOL[precision] if tol is None else tol
    if samples == 0:
        return _report(CHECK_IDS[0], 0, 0.0, 0.0, tol, seed)
    kinds = ("T", "Ka", "Ya", "Kconf")
    ranges = {"T": (0.0, 1.0), "Ka": (0.5, 1.0), "Ya": (0.0, 0.5), "Kconf": (0.0, 1.0)}
    t, r = sample_cone_points(samples, seed, dyadic=(precision == "extended"))
    rng = np.random.default_rng(seed + 1)
    a_draw = rng.uniform(0.0, 1.0, samples)
    worst = [0.0, 0.0]

    def run_chunk(lo, hi):
        wa, wr = 0.0, 0.0
        for k, kind in enumerate(kinds):
            idx = np.arange(lo, hi)
            idx = idx[idx % 4 == k]
            if idx.size == 0:
                continue
            alo, ahi = ranges[kind]
            if precision == "f64":
                a = alo + (ahi - alo) * a_draw[idx]
                ca, cr = _deformation_cell_f64(kind, a, t[idx], r[idx])
                wa, wr = max(wa, ca), max(wr, cr)
            else:
                allowed = [av for av in _EXT_A if alo <= av <= ahi]
                for j, av in enumerate(allowed):
                    sub = idx[idx % (4 * len(allowed)) // 4 == j]
                    if sub.size == 0:
                        continue
                    ca, cr = _deformation_cell_ext(kind, av, t[sub], r[sub])
                    wa, wr = max(wa, ca), max(wr, cr)
        return wa, wr

    if precision == "extended":
        with mp.workdps(_EXT_DPS):
            parts = chunked_map(run_chunk, fixed_chunks(samples), workers=1)
    else:
        parts = chunked_map(run_chunk, fixed_chunks(samples))
    for wa, wr in parts:
        worst[0] = max(worst[0], wa)
        worst[1] = max(worst[1], wr)
    return _report(CHECK_IDS[0], samples, worst[0], worst[1], tol, seed)


# ---------------------------------------------------------------------------
# 2. flux density, two assemblies + coercive envelope


def _flux_cell(kind, a, t, r, phi, pt, pr, slash, potb, use_mp):
    if use_mp:
        out_abs, out_rel = mpf(0), mpf(0)
        rows = zip(t, r, phi, pt, pr, slash, potb)
    else:
        rows = [(t, r, phi, pt, pr, slash, potb)]
        out_abs, out_rel = 0.0, 0.0
    for tk, rk, p0, p1, p2, sl, pb in rows:
        if use_mp:
            tk, rk = mpf(tk), mpf(rk)
            p0, p1, p2 = mpf(float(p0)), mpf(float(p1)), mpf(float(p2))
            sl, pb = mpf(float(sl)), mpf(float(pb))
            am = mpf(a)
        else:
            am = a
        u = tk - rk
        s = np.sqrt((tk - rk) * (tk + rk)) if not use_mp else mp.sqrt(u * (tk + rk))
        xu, xr = mult.field_components(kind, am, u, rk)
        lam = s ** (2 * am - 2) if kind == "Kconf" else 1 + 0 * s
        spec_like = mult.MultiplierSpec(kind, float(a))
        Phi, dU, dR = mult.conjugate_pair(spec_like, tk, rk, p0, p1, p2)
        fd = mult.flux_density_components(xu, xr, lam, tk, rk, dU, dR, sl, pb, Phi)
        alt = mult.flux_density_from_tensor(xu, xr, lam, tk, rk, dU, dR, sl, pb, Phi)
        w, rt = 1 - rk / tk, rk / tk
        ab = abs
        scale = lam * (
            ab(xu) * w * (dU * dU + dR * dR / 2 + ab(dU * dR))
            + (ab(xu) + ab(xr) * (1 + rt)) * dR * dR / 2
            + (ab(xu) + ab(xr)) * sl / 2
            + pb * Phi * Phi / 2
        )
        if use_mp:
            scale = max(scale, mpf(_FLOOR))
            d = ab(fd.value - alt)
            out_abs, out_rel = max(out_abs, d), max(out_rel, d / scale)
            envl = max(fd.lower - fd.value, fd.value - fd.upper)
            out_rel = max(out_rel, envl / scale)
        else:
            scale = np.maximum(scale, _FLOOR)
            d = np.abs(fd.value - alt)
            out_abs = float(np.max(d, initial=0.0))
            out_rel = float(np.max(d / scale, initial=0.0))
            envl = np.maximum(fd.lower - fd.value, fd.value - fd.upper)
            out_rel = max(out_rel, float(np.max(envl / scale, initial=0.0)))
    return out_abs, out_rel


def check_flux_identity(samples=10000, seed=2026, tol=None, precision="f64"):
    """Explicit flux form == tensor contraction; lower <= value <= upper."""
    tol = DEFAULT_TOL[precision] if tol is None else tol
    if samples == 0:
        return _report(CHECK_IDS[1], 0, 0.0, 0.0, tol, seed)
    t, r = sample_cone_points(samples, seed, dyadic=(precision == "extended"))
    rng = np.random.default_rng(seed + 2)
    phi, pt, pr = rng.uniform(-1, 1, (3, samples))
    slash = rng.uniform(0, 1, samples)
    potb = rng.uniform(0, 1, samples)
    a_draw = rng.uniform(0.0, 1.0, samples)
    kinds = ("T", "Ka", "Ya", "Kconf")
    ranges = {"T": (0.0, 1.0), "Ka": (0.5, 1.0), "Ya": (0.0, 0.5), "Kconf": (0.0, 1.0)}
    use_mp = precision == "extended"

    def run_chunk(lo, hi):
        wa, wr = 0.0, 0.0
        for k, kind in enumerate(kinds):
            idx = np.arange(lo, hi)
            idx = idx[idx % 4 == k]
            if idx.size == 0:
                continue
            alo, ahi = ranges[kind]
            if use_mp:
                for j, av in enumerate([av for av in _EXT_A if alo <= av <= ahi]):
                    nall = len([av2 for av2 in _EXT_A if alo <= av2 <= ahi])
                    sub = idx[idx % (4 * nall) // 4 == j]
                    if sub.size == 0:
                        continue
                    ca, cr = _flux_cell(kind, av, t[sub], r[sub], phi[sub],
                                        pt[sub], pr[sub], slash[sub], potb[sub], True)
                    wa, wr = max(wa, float(ca)), max(wr, float(cr))
            else:
                # one representative a per chunk keeps it vectorized; vary by chunk
                av = alo + (ahi - alo) * float(a_draw[idx[0]])
                ca, cr = _flux_cell(kind, av, t[idx], r[idx], phi[idx],
                                    pt[idx], pr[idx], slash[idx], potb[idx], False)
                wa, wr = max(wa, ca), max(wr, cr)
        return wa, wr

    if use_mp:
        with mp.workdps(_EXT_DPS):
            parts = chunked_map(run_chunk, fixed_chunks(samples), workers=1)
    else:
        parts = chunked_map(run_chunk, fixed_chunks(samples))
    wa = max(p[0] for p in parts)
    wr = max(p[1] for p in parts)
    return _report(CHECK_IDS[1], samples, wa, wr, tol, seed)


# ---------------------------------------------------------------------------
# 3. conjugation potential cancellation


_FD_SPOTS = ((1.7, 0.9), (3.2, 2.5), (5.0, 0.5))  # (u, r), O(1) piece scale
_FD_BOUND = 1e-6


def check_potentials(samples=10000, seed=2026, tol=None, precision="f64"):
    """Analytic pieces of the conjugation potential cancel for both weights.

    The closed-form value is identically zero; the check evaluates the three
    Bondi pieces and takes |sum| / max|piece| as the relative residual.  In
    binary64 mode a handful of fixed spot points additionally exercise the
    finite-difference route against an absolute 1e-6 bound (its truncation
    error, not the identity, dominates there).  Points inside the axis tube
    r < 1e-6 are excluded by the sampler.
    """
    tol = DEFAULT_TOL[precision] if tol is None else tol
    if samples == 0:
        return _report(CHECK_IDS[2], 0, 0.0, 0.0, tol, seed)
    t, r = sample_cone_points(samples, seed, dyadic=(precision == "extended"))
    u = t - r

    def run_chunk(lo, hi):
        wa, wr = 0.0, 0.0
        for weight in ("r", "s2"):
            if precision == "f64":
                val, scale = mult.conformal_potential(weight, u[lo:hi], r[lo:hi],
                                                      path="pieces")
                wa = max(wa, float(np.max(np.abs(val), initial=0.0)))
                wr = max(wr, float(np.max(np.abs(val) / np.maximum(scale, _FLOOR),
                                          initial=0.0)))
            else:
                for k in range(lo, hi):
                    val, scale = mult.conformal_potential(
                        weight, mpf(u[k]), mpf(r[k]), path="pieces"
                    )
                    wa = max(wa, float(abs(val)))
                    wr = max(wr, float(abs(val) / max(scale, mpf(_FLOOR))))
        return wa, wr

    if precision == "extended":
        with mp.workdps(_EXT_DPS):
            parts = chunked_map(run_chunk, fixed_chunks(samples), workers=1)
    else:
        parts = chunked_map(run_chunk, fixed_chunks(samples))
    wa = max(p[0] for p in parts)
    wr = max(p[1] for p in parts)
    verdict_extra = True
    if precision == "f64":
        for uu, rr in _FD_SPOTS:
            for weight in ("r", "s2"):
                val, _ = mult.conformal_potential(weight, uu, rr, path="fd")
                verdict_extra = verdict_extra and abs(float(val)) <= _FD_BOUND
    rep = _report(CHECK_IDS[2], samples, wa, wr, tol, seed)
    if not verdict_extra:
        rep.verdict = "fail"
    return rep


# ---------------------------------------------------------------------------
# 4. conjugation / combining identities on exact polynomial fields


def _poly_batch(rng, nbatch):
    """Random dense total-degree-4 polynomials in (t, r), dyadic coeffs."""
    coeffs = rng.integers(-32, 33, size=(nbatch, 5, 5)).astype(float) / 16.0
    for i in range(5):
        for j in range(5):
            if i + j > 4:
                coeffs[:, i, j] = 0.0
    return coeffs


def _poly_eval(c, t, r):
    """Horner in t then r; c is a (nt, nr) coefficient table."""
    nt, nr = c.shape
    acc = 0.0 * t
    for i in range(nt - 1, -1, -1):
        inner = 0.0 * t
        for j in range(nr - 1, -1, -1):
            inner = inner * r + c[i, j]
        acc = acc * t + inner
    return acc


def _poly_dt(c):
    out = np.zeros_like(c)
    for i in range(1, c.shape[0]):
        out[i - 1, :] = i * c[i, :]
    return out


def _poly_dr(c):
    out = np.zeros_like(c)
    for j in range(1, c.shape[1]):
        out[:, j - 1] = j * c[:, j]
    return out


def _poly_mul_r(c):
    out = np.zeros((c.shape[0] + 1, c.shape[1] + 1))
    out[: c.shape[0], 1:] = c
    return out


def _poly_mul_s2(c):
    """(t^2 - r^2) * poly."""
    out = np.zeros((c.shape[0] + 2, c.shape[1] + 2))
    out[2:, : c.shape[1]] += c
    out[: c.shape[0], 2:] -= c
    return out


def _pad(c, shape):
    out = np.zeros(shape)
    out[: c.shape[0], : c.shape[1]] = c
    return out


def _sparse_mpf(c):
    """Nonzero coefficients of a table as (i, j, mpf) triples."""
    return [(i, j, mpf(v)) for (i, j), v in np.ndenumerate(c) if v != 0.0]


def _eval_sparse(terms, tp, rp):
    """Evaluate a sparse coefficient table against power tables."""
    return mp.fsum([v * tp[i] * rp[j] for (i, j, v) in terms])


def _combining_tables(c):
    """Sparse mpf tables for a polynomial and its conjugated derivatives."""
    cr = _poly_mul_r(c)
    cs = _poly_mul_s2(c)
    return {
        "p": _sparse_mpf(c),
        "p_t": _sparse_mpf(_poly_dt(c)),
        "p_r": _sparse_mpf(_poly_dr(c)),
        "pr_t": _sparse_mpf(_poly_dt(cr)),
        "pr_r": _sparse_mpf(_poly_dr(cr)),
        "ps_t": _sparse_mpf(_poly_dt(cs)),
        "ps_r": _sparse_mpf(_poly_dr(cs)),
    }


def _combining_point_ext(tab, a, tk, rk):
    """Scalar extended-precision residuals of the five identities at a point.

    Mirrors _combining_batch term by term; scalar mpf arithmetic because the
    per-point subsets are far too small for array dispatch to pay off.
    """
    t, r = mpf(tk), mpf(rk)
    u, ub = t - r, t + r
    s2 = u * ub
    s = mp.sqrt(s2)
    tp = [mpf(1)]
    rp = [mpf(1)]
    for _ in range(6):
        tp.append(tp[-1] * t)
        rp.append(rp[-1] * r)
    p = _eval_sparse(tab["p"], tp, rp)
    p_t = _eval_sparse(tab["p_t"], tp, rp)
    p_r = _eval_sparse(tab["p_r"], tp, rp)
    pr_t = _eval_sparse(tab["pr_t"], tp, rp)
    pr_r = _eval_sparse(tab["pr_r"], tp, rp)
    ps_t = _eval_sparse(tab["ps_t"], tp, rp)
    ps_r = _eval_sparse(tab["ps_r"], tp, rp)

    resid, scale = [], []
    lhs = (pr_t + pr_r) / r
    rhs = p_t + p_r + p / r
    resid.append(lhs - rhs)
    scale.append(abs(lhs) + abs(p_t) + abs(p_r) + abs(p / r))
    resid.append(pr_t / r - p_t)
    scale.append(abs(pr_t / r) + abs(p_t))
    lhs = (ps_t + ps_r) / s2
    rhs = p_t + p_r + 2 * p / ub
    resid.append(lhs - rhs)
    scale.append(abs(lhs) + abs(p_t) + abs(p_r) + abs(2 * p / ub))
    lhs = ps_t / s2
    rhs = p_t + 2 * t * p / (ub * u)
    resid.append(lhs - rhs)
    scale.append(abs(lhs) + abs(p_t) + abs(2 * t * p / (ub * u)))
    sa = s ** a
    sam1 = sa / s
    lhs = sa * (ub / t) * (ps_r + (r / t) * ps_t) / s2
    rhs = sam1 * ub * (s / t) * (ps_t + ps_r) / s2 - (
        sam1 * u * ub / t
    ) * (s / t) * ps_t / s2
    resid.append(lhs - rhs)
    scale.append(abs(lhs) + abs(rhs) + abs(sam1 * ub * (s / t) * ps_t / s2))
    out_abs, out_rel = 0.0, 0.0
    for d, sc in zip(resid, scale):
        out_abs = max(out_abs, float(abs(d)))
        out_rel = max(out_rel, float(abs(d) / max(sc, mpf(_FLOOR))))
    return out_abs, out_rel


def _combining_batch(c, t, r, a):
    """Residuals of the five conjugation identities for one polynomial
    (vectorized binary64 path)."""
    u, ub = t - r, t + r
    s2 = u * ub
    s = np.sqrt(s2)
    cr = _poly_mul_r(c)
    cs = _poly_mul_s2(c)
    p = _poly_eval(c, t, r)
    p_t = _poly_eval(_poly_dt(c), t, r)
    p_r = _poly_eval(_poly_dr(c), t, r)
    pr_t = _poly_eval(_poly_dt(cr), t, r)
    pr_r = _poly_eval(_poly_dr(cr), t, r)
    ps_t = _poly_eval(_poly_dt(cs), t, r)
    ps_r = _poly_eval(_poly_dr(cs), t, r)

    resid, scale = [], []
    # (1/r) delB_r (r phi) == delB_r phi + phi/r
    lhs = (pr_t + pr_r) / r
    rhs = p_t + p_r + p / r
    resid.append(lhs - rhs)
    scale.append(abs(lhs) + abs(p_t) + abs(p_r) + abs(p / r))
    # (1/r) d_t (r phi) == d_t phi
    resid.append(pr_t / r - p_t)
    scale.append(abs(pr_t / r) + abs(p_t))
    # (1/s^2) delB_r (s^2 phi) == delB_r phi + 2 phi / ubar
    lhs = (ps_t + ps_r) / s2
    rhs = p_t + p_r + 2 * p / ub
    resid.append(lhs - rhs)
    scale.append(abs(lhs) + abs(p_t) + abs(p_r) + abs(2 * p / ub))
    # (1/s^2) d_t (s^2 phi) == d_t phi + 2 t phi / (ubar u)
    lhs = ps_t / s2
    rhs = p_t + 2 * t * p / (ub * u)
    resid.append(lhs - rhs)
    scale.append(abs(lhs) + abs(p_t) + abs(2 * t * p / (ub * u)))
    # combined weighted-derivative identity on psi = s^2 phi:
    #   s^a (ub/t) [d_r psi + (r/t) d_t psi] / s^2
    #     == s^(a-1) ub (s/t) (delB_r psi)/s^2
    #        - (s^(a-1) u ub / t) (s/t) (d_t psi)/s^2
    sa = s ** a
    sam1 = sa / s
    lhs = sa * (ub / t) * (ps_r + (r / t) * ps_t) / s2
    rhs = sam1 * ub * (s / t) * (ps_t + ps_r) / s2 - (
        sam1 * u * ub / t
    ) * (s / t) * ps_t / s2
    resid.append(lhs - rhs)
    scale.append(abs(lhs) + abs(rhs) + abs(sam1 * ub * (s / t) * ps_t / s2))
    out_abs, out_rel = 0.0, 0.0
    for d, sc in zip(resid, scale):
        dd = np.abs(d)
        out_abs = max(out_abs, float(np.max(dd, initial=0.0)))
        out_rel = max(out_rel, float(np.max(dd / np.maximum(sc, _FLOOR),
                                            initial=0.0)))
    return out_abs, out_rel


def check_combining_identities(samples=10000, seed=2026, tol=None, precision="f64"):
    """Conjugation identities hold on random exact polynomial fields."""
    tol = DEFAULT_TOL[precision] if tol is None else tol
    if samples == 0:
        return _report(CHECK_IDS[3], 0, 0.0, 0.0, tol, seed)
    t, r = sample_cone_points(samples, seed, dyadic=(precision == "extended"))
    rng = np.random.default_rng(seed + 3)
    npoly = 50
    coeffs = _poly_batch(rng, npoly)
    a_draw = rng.uniform(0.0, 1.0, npoly)
    use_mp = precision == "extended"

    if use_mp:
        with mp.workdps(_EXT_DPS):
            tables = [_combining_tables(coeffs[b]) for b in range(npoly)]
            a_ext = [mpf(_EXT_A[b % len(_EXT_A)]) for b in range(npoly)]

            def run_chunk(lo, hi):
                wa, wr = 0.0, 0.0
                for k in range(lo, hi):
                    b = k % npoly
                    ca, cr = _combining_point_ext(tables[b], a_ext[b], t[k], r[k])
                    wa, wr = max(wa, ca), max(wr, cr)
                return wa, wr

            parts = chunked_map(run_chunk, fixed_chunks(samples), workers=1)
    else:

        def run_chunk(lo, hi):
            wa, wr = 0.0, 0.0
            for b in range(npoly):
                idx = np.arange(lo, hi)
                idx = idx[idx % npoly == b]
                if idx.size == 0:
                    continue
                ca, cr = _combining_batch(coeffs[b], t[idx], r[idx], float(a_draw[b]))
                wa, wr = max(wa, ca), max(wr, cr)
            return wa, wr

        parts = chunked_map(run_chunk, fixed_chunks(samples))
    wa = max(p[0] for p in parts)
    wr = max(p[1] for p in parts)
    return _report(CHECK_IDS[3], samples, wa, wr, tol, seed)


# ---------------------------------------------------------------------------
# 5. weight lemma


def check_weight_lemma(samples=10000, seed=2026, precision="f64"):
    """Sign pattern / ratio bounds / concavity of the scalar weight.

    No tolerance argument: the lemma asserts inequalities, so the check uses
    a fixed internal slack (1e-12 relative in binary64, 1e-30 extended) and
    reports the largest violation as the residual.
    """
    slack = 1e-12 if precision == "f64" else 1e-30
    if samples == 0:
        return _report(CHECK_IDS[4], 0, 0.0, 0.0, slack, seed)
    t, r = sample_cone_points(samples, seed, dyadic=(precision == "extended"))
    grid = np.linspace(0.0, 1.0, 21) if precision == "f64" else np.array(_EXT_A)
    use_mp = precision == "extended"

    if use_mp:
        # one rational a per point, round-robin (same budget rule as the
        # deformation check); conversions hoisted out of the sub-checks
        a_ms = [mpf(v) for v in _EXT_A]

        def run_chunk(lo, hi):
            viol_abs, viol_rel = 0.0, 0.0
            for k in range(lo, hi):
                a = float(grid[k % len(grid)])
                am = a_ms[k % len(a_ms)]
                tm, rm = mpf(t[k]), mpf(r[k])
                u, ub = tm - rm, tm + rm
                q = mult.q_weight(am, u, ub)
                sc = abs(mult.power_gap(2 * am, u, ub) / (ub - u)) * 2 + abs(
                    2 * am * (ub ** (2 * am - 1) + u ** (2 * am - 1))
                ) / 2
                sc = max(sc, mpf(_FLOOR))
                v = -q if a >= 0.5 else q
                if a in (0.5, 1.0):
                    v = abs(q)
                viol_abs = max(viol_abs, float(max(v, mpf(0))))
                viol_rel = max(viol_rel, float(max(v / sc, mpf(0))))
                if a >= 0.5 and a > 0:
                    lo_b, hi_b = mult.weight_ratio_bounds(a)
                    ratio = mult.weight_ratio(am, tm, rm)
                    v = max(lo_b - ratio, ratio - hi_b)
                    viol_abs = max(viol_abs, float(max(v, mpf(0))))
                    viol_rel = max(viol_rel, float(max(v / hi_b, mpf(0))))
                    glo, g, ghi = mult.g_profile(am, rm / tm)
                    v = max(glo - g, g - ghi) / max(abs(ghi), mpf(_FLOOR))
                    viol_rel = max(viol_rel, float(max(v, mpf(0))))
                    cvx = mult.q_convexity_slope(am, u, ub)
                    viol_rel = max(viol_rel, float(max(cvx, mpf(0))))
            return viol_abs, viol_rel

        with mp.workdps(_EXT_DPS):
            parts = chunked_map(run_chunk, fixed_chunks(samples), workers=1)
    else:

        def run_chunk(lo, hi):
            viol_abs, viol_rel = 0.0, 0.0
            tt, rr = t[lo:hi], r[lo:hi]
            for a in grid:
                u, ub = tt - rr, tt + rr
                q = mult.q_weight(a, u, ub)
                sc = np.maximum(
                    np.abs(mult.power_gap(2 * a, u, ub) / (ub - u)) * 2
                    + np.abs(2 * a * (ub ** (2 * a - 1) + u ** (2 * a - 1))) / 2,
                    _FLOOR,
                )
                v = np.where(a >= 0.5, -q, q)
                if a in (0.5, 1.0):
                    v = np.abs(q)
                viol_abs = max(viol_abs, float(np.max(v, initial=0.0)))
                viol_rel = max(viol_rel, float(np.max(v / sc, initial=0.0)))
                if a >= 0.5 and a > 0:
                    lo_b, hi_b = mult.weight_ratio_bounds(float(a))
                    ratio = mult.weight_ratio(a, tt, rr)
                    v = np.maximum(lo_b - ratio, ratio - hi_b)
                    viol_abs = max(viol_abs, float(np.max(v, initial=0.0)))
                    viol_rel = max(viol_rel, float(np.max(v / hi_b, initial=0.0)))
                    # profile bounds for g(omega) at omega = r/t
                    glo, g, ghi = mult.g_profile(a, rr / tt)
                    v = np.maximum(glo - g, g - ghi) / np.maximum(np.abs(ghi), _FLOOR)
                    viol_rel = max(viol_rel, float(np.max(v, initial=0.0)))
                    # concavity proxy
                    cvx = mult.q_convexity_slope(a, tt - rr, tt + rr)
                    viol_rel = max(viol_rel, float(np.max(cvx, initial=0.0)))
            return viol_abs, viol_rel

        parts = chunked_map(run_chunk, fixed_chunks(samples))
    wa = max(p[0] for p in parts)
    wr = max(p[1] for p in parts)
    rep = _report(CHECK_IDS[4], samples, wa, wr, slack, seed)
    return rep


CHECKS = {
    CHECK_IDS[0]: check_deformation_identity,
    CHECK_IDS[1]: check_flux_identity,
    CHECK_IDS[2]: check_potentials,
    CHECK_IDS[3]: check_combining_identities,
    CHECK_IDS[4]: check_weight_lemma,
}


def run_all_checks(samples=10000, seed=2026, tol=None, precision="f64"):
    reports = []
    for cid, fn in CHECKS.items():
        if fn is check_weight_lemma:
            reports.append(fn(samples=samples, seed=seed, precision=precision))
        else:
            reports.append(fn(samples=samples, seed=seed, tol=tol, precision=precision))
    return reports
