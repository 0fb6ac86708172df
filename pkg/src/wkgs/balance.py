"""Slab balances, boundedness ratios, decay fitting, and pointwise sups.

Between two hyperboloids the multiplier identity integrates to

    flux(s0) - flux(s1) = bulk_A + bulk_C + source,

with no side flux as long as the field's support stays inside the truncated
cone.  flux(s) integrates the conjugated flux density against Omega^{-2} dx
on the slice; the right-hand terms are spacetime integrals taken as
trapezoid sums over s-layers, each layer itself a slice quadrature:

    source = int ds int  Lam G Omega^{-1} (X Phi)      dVol
    bulk_A = int ds int  Lam A[dPhi, dPhi] Omega^{-2}  dVol
    bulk_C = int ds int  (2-2a) s^{2a-7} Q(N, X)       dVol   (Kconf only),

where G is the inhomogeneity of the second-order operator, G = box phi =
-phi_tt + lap phi.  Source callables throughout this package follow the
solver's orientation instead (phi_tt = lap phi + F, i.e. F = -G), so the
source assembly negates the sampled values; hand verify_balance the same
F you would hand the stepper.

bulk_A vanishes identically for T and Kconf, and for Ka on radial fields;
for Ya its arr coefficient carries a r^(2a-1) factor, integrable but
unbounded at the axis, so the layer quadrature splits that factor off and
integrates it with exact power-law moments (power_weighted_coefficients).
Every 1/Omega^2 is cancelled against the measure's r^2 symbolically before
any node is touched, so r = 0 contributes finite values throughout.

Layer spacing obeys ds <= dt * s0 / t_max, keeping adjacent layers within
one stored time step of each other everywhere on the slice.  Layers are
evaluated in parallel chunks (the band is only read) and reduced in fixed
order, so results do not depend on the worker count.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._reduce import chunked_map, fixed_chunks, thread_count
from .energies import FOUR_PI, norm_value, sample_slice
from .geometry import cone_cut_radius, jbracket
from .multipliers import (
    field_components,
    flux_density_components,
    kconf_dissipative_density,
    lambda_weight,
    ya_closed_blocks,
)

ESTIMATES = (
    "energy_est1",
    "est_weight1",
    "est_weight2",
    "frac_conf_wave1",
    "frac_conf_wave2",
)

TRACKER_KINDS = ("tau_half", "tau_threehalf", "s_a_tau_half")


# --- power-weighted quadrature ------------------------------------------------


def _cell_weights_direct(x, x0, x1, p):
    """Node weights for int_{x0}^{x1} x^p * (interpolant of g) dx, exact
    moments in the raw monomial basis (fine while x stays small)."""
    k = np.arange(x.size, dtype=float)
    mom = (x1 ** (p + k + 1) - x0 ** (p + k + 1)) / (p + k + 1)
    V = np.vander(x, x.size, increasing=True)
    return np.linalg.solve(V.T, mom)


def _pair_weights_series(c, p):
    """Weights for node triples {c-1, c, c+1} (vectorized over centers c).

    int x^p y^k dx over y in [-1, 1] expands x^p = c^p (1 + y/c)^p
    binomially; with c >= 17 the terms fall off by >= 17 per order, so
    m <= 12 is exact to double precision.  Odd moments over the symmetric
    cell vanish, and the quadratic cardinal functions have the fixed
    coefficients used in the closing lines.
    """
    m0 = np.zeros_like(c)
    m1 = np.zeros_like(c)
    m2 = np.zeros_like(c)
    term = c ** p
    for m in range(13):
        if m % 2 == 0:
            m0 += term * 2.0 / (m + 1)
            m2 += term * 2.0 / (m + 3)
        else:
            m1 += term * 2.0 / (m + 2)
        term = term * (p - m) / ((m + 1.0) * c)
    w_lo = 0.5 * (m2 - m1)
    w_mid = m0 - m2
    w_hi = 0.5 * (m2 + m1)
    return w_lo, w_mid, w_hi


def power_weighted_coefficients(n_nodes, h, p):
    """Node weights w with sum(w * g(j h)) ~ int_0^{(n-1)h} r^p g(r) dr.

    Product quadrature on node pairs: g is replaced by its piecewise
    quadratic (a cubic across the last four nodes when the cell count is
    odd) and r^p * polynomial integrated by exact moments, so an r^(2a-1)
    factor with exponent in (-1, 0) costs nothing at the axis.  p = 0
    reproduces the plain Simpson family.
    """
    if not p > -1.0:
        raise ValueError(f"power weight needs p > -1 for integrability, got {p}")
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    w = np.zeros(n_nodes)
    x = np.arange(n_nodes, dtype=float)
    cells = n_nodes - 1
    if cells == 1:
        w[:] = _cell_weights_direct(x, 0.0, 1.0, p)
        return w * h ** (p + 1)
    end = cells if cells % 2 == 0 else cells - 3
    starts = np.arange(0, end, 2)
    near = starts[starts < 16]
    far = starts[starts >= 16]
    for i in near:
        w[i : i + 3] += _cell_weights_direct(x[i : i + 3], x[i], x[i + 2], p)
    if far.size:
        lo, mid, hi = _pair_weights_series(x[far] + 1.0, p)
        np.add.at(w, far, lo)
        np.add.at(w, far + 1, mid)
        np.add.at(w, far + 2, hi)
    if cells % 2:
        w[-4:] += _cell_weights_direct(x[-4:], x[-4], x[-1], p)
    return w * h ** (p + 1)


# --- per-slice integrals ------------------------------------------------------


def _conjugate_nodes(kind, sdata, field):
    """(Phi, dU, dR) of Phi = Omega*phi at the slice nodes.

    The same product-rule identities as multipliers.conjugate_pair, minus
    its axis guard: every use below multiplies the r-weighted pair by a
    measure that has already absorbed the 1/Omega^2, so r = 0 is finite.
    """
    val, pt, pr = sdata.data[field][((0, 0), 0)]
    sample = sdata.sample
    t, r = sample.t, sample.r
    if kind == "T":
        return val, pt, pt + pr
    if kind in ("Ka", "Ya"):
        return r * val, r * pt, r * (pt + pr) + val
    u = t - r
    s2 = u * (t + r)
    return s2 * val, s2 * pt + 2 * t * val, s2 * (pt + pr) + 2 * u * val


def _spacing(sample):
    return float(sample.r[1] - sample.r[0])


def flux_integral(spec, sdata, field, c_mass=0.0):
    """int fluxdensity * Omega^{-2} dx over the slice, axis-safe per kind."""
    sample = sdata.sample
    t, r, s = sample.t, sample.r, sample.s
    u = t - r
    Phi, dU, dR = _conjugate_nodes(spec.kind, sdata, field)
    xu, xr = field_components(spec.kind, spec.a, u, r)
    lam = lambda_weight(spec, s)
    pot = c_mass * c_mass if spec.kind == "T" else 0.0
    if spec.kind == "Ya":
        # Omega^2 = r^2 cancels the measure; Xr = r^(2a) leaves a fractional
        # kink at the axis, so its term goes through exact power moments and
        # only the smooth Xu part through Simpson
        fd0 = flux_density_components(xu, 0.0, lam, t, r, dU, dR)
        pw = power_weighted_coefficients(sample.n_nodes, _spacing(sample),
                                         2.0 * spec.a)
        kink = (1.0 + r / t) * dR * dR / 2.0
        return FOUR_PI * (
            float(np.sum(sample.coef * fd0.value)) + float(np.sum(pw * kink))
        )
    fd = flux_density_components(xu, xr, lam, t, r, dU, dR, pot_b=pot, Phi=Phi)
    if spec.kind == "T":
        return float(np.sum(sample.weights * fd.value))
    if spec.kind == "Ka":
        # Omega^2 = r^2 cancels the measure's r^2; the pair is r-weighted
        return FOUR_PI * float(np.sum(sample.coef * fd.value))
    return float(np.sum(sample.weights * fd.value)) / s ** 4


def _source_layer(spec, sdata, field):
    if sdata.src.get(field) is None:
        return 0.0
    F = -sdata.src[field]  # stored as stepper forcing; the identity wants box phi
    sample = sdata.sample
    t, r, s = sample.t, sample.r, sample.s
    u = t - r
    _, dU, dR = _conjugate_nodes(spec.kind, sdata, field)
    xu, xr = field_components(spec.kind, spec.a, u, r)
    xphi = xu * dU + xr * dR
    if spec.kind == "T":
        return float(np.sum(sample.dvol_weights() * F * xphi))
    if spec.kind == "Ya":
        # F*(X Phi)/r against 4 pi r^2 (s/t): the Xr dR part carries
        # r^(1+2a), so it gets power moments like the flux kink
        st = s / t
        pw = power_weighted_coefficients(sample.n_nodes, _spacing(sample),
                                         1.0 + 2.0 * spec.a)
        return FOUR_PI * (
            float(np.sum(sample.coef * st * F * r * xu * dU))
            + float(np.sum(pw * st * F * dR))
        )
    if spec.kind == "Ka":
        # density F*(X Phi)/r against 4 pi r^2 (s/t) coef: one r survives
        st = s / t
        return FOUR_PI * float(np.sum(sample.coef * st * F * r * xphi))
    lam_over_om2 = s ** (2 * spec.a - 4)
    return lam_over_om2 * float(np.sum(sample.dvol_weights() * F * xphi))


def _bulk_a_layer(spec, sdata, field):
    if spec.kind != "Ya" or spec.a == 0.0:
        return 0.0  # T, Kconf closed-zero; Ka radial closed-zero; Ya(0) = 0
    sample = sdata.sample
    t, r = sample.t, sample.r
    u = t - r
    st = sample.s / t
    _, dU, dR = _conjugate_nodes("Ya", sdata, field)
    m, n = ya_closed_blocks(spec.a, u, r)
    smooth = 4.0 * m * dU * dU - 4.0 * m * dU * dR + (m - n) * dR * dR
    pw = power_weighted_coefficients(sample.n_nodes, _spacing(sample),
                                     2.0 * spec.a - 1.0)
    return FOUR_PI * (
        float(np.sum(sample.coef * st * smooth))
        + spec.a * float(np.sum(pw * st * dR * dR))
    )


def _bulk_c_layer(spec, sdata, field):
    if spec.kind != "Kconf":
        return 0.0
    sample = sdata.sample
    _, dU, dR = _conjugate_nodes("Kconf", sdata, field)
    dens = kconf_dissipative_density(spec.a, sample.t, sample.r, dU, dR)
    return float(np.sum(sample.dvol_weights() * dens))


def bulk_c_node_densities(spec, sdata, field):
    """The sign-definite conformal bulk density at every node (for the
    dominant-energy check min >= -tol)."""
    _, dU, dR = _conjugate_nodes("Kconf", sdata, field)
    return kconf_dissipative_density(spec.a, sdata.sample.t, sdata.sample.r, dU, dR)


# --- slab balance -------------------------------------------------------------


def layer_values(grid, s0, s1, r_cut=None, n_layers=None):
    """Trapezoid s-grid for the bulk integrals.

    Spacing keeps adjacent layers within one stored step of each other at
    the widest point of the slab (ds <= dt * s0 / t_max); an explicit
    n_layers overrides it, e.g. when the band is analytic.
    """
    s0, s1 = float(s0), float(s1)
    if not s1 > s0 > 1.0:
        raise ValueError(f"need 1 < s0 < s1, got s0={s0}, s1={s1}")
    if n_layers is None:
        lim = cone_cut_radius(s1)
        cut = r_cut(s1) if callable(r_cut) else r_cut
        if cut is not None:
            lim = min(lim, float(cut))
        lim = min(lim, grid.extent)
        t_max = math.hypot(s1, lim)
        n_layers = max(2, int(math.ceil((s1 - s0) * t_max / (grid.dt * s0))))
    return np.linspace(s0, s1, int(n_layers) + 1)


@dataclass
class BalanceReport:
    kind: str
    a: float
    s0: float
    s1: float
    flux_in: float
    flux_out: float
    bulk_A: float
    bulk_C: float
    source_term: float
    residual: float  # |flux_in - flux_out - bulk_A - bulk_C - source| / scale
    scale: float
    n_layers: int
    grid_id: str

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def verify_balance(band, spec, s0, s1, *, field=None, source=None, c_mass=0.0,
                   n_layers=None, r_cut=None, grid=None, grid_id=""):
    """Assemble both sides of the slab identity and report the residual.

    The band must cover every slice of [s0, s1]; source is the F callable
    (or per-field dict) evaluated at the nodes.  c_mass adds the potential
    c^2 Phi^2/2 to the T flux only — for the weighted multipliers the mass
    term belongs in the source.
    """
    if grid is None:
        from .solver.grid import GridSpec

        grid = GridSpec.from_dict(band.meta["grid"])
    if grid.mode != "radial":
        raise NotImplementedError(
            "slab balances are assembled radially; run the radial model"
        )
    if c_mass and spec.kind != "T":
        raise ValueError(
            "the mass potential enters the T flux only; fold c^2 phi into "
            "the source for the weighted multipliers"
        )
    if field is None:
        if len(band.fields) != 1:
            raise ValueError(f"band holds fields {band.fields}; name one")
        field = band.fields[0]

    s_layers = layer_values(grid, s0, s1, r_cut=r_cut, n_layers=n_layers)
    n_vals = s_layers.size

    def eval_layers(lo, hi):
        rows = []
        for i in range(lo, hi):
            s = float(s_layers[i])
            cut = r_cut(s) if callable(r_cut) else r_cut
            sdata = sample_slice(
                band, s, fields=(field,), k_max=0, r_cut=cut,
                source=source, grid=grid,
            )
            fx = (
                flux_integral(spec, sdata, field, c_mass=c_mass)
                if i in (0, n_vals - 1)
                else 0.0
            )
            rows.append((
                fx,
                _source_layer(spec, sdata, field),
                _bulk_a_layer(spec, sdata, field),
                _bulk_c_layer(spec, sdata, field),
            ))
        return rows

    chunks = fixed_chunks(n_vals, max(1, min(thread_count(), n_vals)))
    rows = [row for part in chunked_map(eval_layers, chunks) for row in part]
    table = np.asarray(rows)  # columns: flux, source, bulk_A, bulk_C

    ds = (s_layers[-1] - s_layers[0]) / (n_vals - 1)
    tw = np.full(n_vals, ds)
    tw[0] = tw[-1] = 0.5 * ds
    flux_in = float(table[0, 0])
    flux_out = float(table[-1, 0])
    source_term = float(np.sum(tw * table[:, 1]))
    bulk_a = float(np.sum(tw * table[:, 2]))
    bulk_c = float(np.sum(tw * table[:, 3]))

    defect = flux_in - flux_out - bulk_a - bulk_c - source_term
    scale = max(abs(flux_in), abs(flux_out), abs(source_term),
                abs(bulk_a) + abs(bulk_c))
    if scale == 0.0:
        scale = 1.0
    return BalanceReport(
        kind=spec.kind,
        a=spec.a,
        s0=float(s0),
        s1=float(s1),
        flux_in=flux_in,
        flux_out=flux_out,
        bulk_A=bulk_a,
        bulk_C=bulk_c,
        source_term=source_term,
        residual=abs(defect) / scale,
        scale=scale,
        n_layers=n_vals - 1,
        grid_id=grid_id or f"{grid.mode}-n{grid.n_cells}",
    )


# --- boundedness ratios -------------------------------------------------------

# estimate -> (lhs norm kinds, initial-slice norm kinds, forcing uses a)
_ESTIMATE_PARTS = {
    "energy_est1": (("EW",), ("EW",), False),
    "est_weight1": (("E1a",), ("E1a",), True),
    "est_weight2": (("E2a",), ("E2a",), True),
    "frac_conf_wave1": (("E1a", "E2a"), ("E1a", "E2a"), True),
    "frac_conf_wave2": (("EWa",), ("E1a", "E2a", "EW"), True),
}


@dataclass
class EstimateReport:
    estimate: str
    a: float
    s_lo: float
    s_hi: float
    lhs_sup: float
    sup_at: float
    rhs_initial: float
    rhs_forcing: float
    ratio: float
    degenerate: bool

    @property
    def rhs(self):
        return self.rhs_initial + self.rhs_forcing

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def estimate_from_slices(slices, estimate, a, field):
    """Boundedness ratio sup_s LHS / RHS with the implied constant set to 1.

    slices: SliceData list ascending in s; the first is the initial slice.
    The forcing term is the trapezoid s-integral of the NWa increments, so
    slices sampled without a source give the homogeneous (F = 0) form.
    """
    if estimate not in _ESTIMATE_PARTS:
        raise ValueError(f"unknown estimate {estimate!r} (choose from {ESTIMATES})")
    lhs_kinds, rhs_kinds, forced_a = _ESTIMATE_PARTS[estimate]
    s = np.asarray([sd.s for sd in slices], dtype=float)
    if s.size < 2 or np.any(np.diff(s) <= 0):
        raise ValueError("need at least two slices, ascending in s")
    lhs = np.asarray([
        sum(norm_value(k, sd, field, a=a) for k in lhs_kinds) for sd in slices
    ])
    rhs_initial = sum(norm_value(k, slices[0], field, a=a) for k in rhs_kinds)
    a_nwa = a if forced_a else 0.0
    inc = np.asarray([
        norm_value("NWa_increment", sd, field, a=a_nwa) for sd in slices
    ])
    rhs_forcing = float(np.trapezoid(inc, s))
    top = int(np.argmax(lhs))
    rhs = rhs_initial + rhs_forcing
    if rhs == 0.0:
        return EstimateReport(estimate, a, float(s[0]), float(s[-1]),
                              float(lhs[top]), float(s[top]), 0.0, 0.0,
                              math.nan, True)
    return EstimateReport(
        estimate=estimate,
        a=a,
        s_lo=float(s[0]),
        s_hi=float(s[-1]),
        lhs_sup=float(lhs[top]),
        sup_at=float(s[top]),
        rhs_initial=float(rhs_initial),
        rhs_forcing=rhs_forcing,
        ratio=float(lhs[top]) / rhs,
        degenerate=False,
    )


def verify_estimate(band, estimate, a, s_values, *, field=None, source=None,
                    r_cut=None, grid=None):
    """estimate_from_slices over freshly sampled slices of a covered band."""
    if field is None:
        if len(band.fields) != 1:
            raise ValueError(f"band holds fields {band.fields}; name one")
        field = band.fields[0]
    slices = []
    for s in s_values:
        cut = r_cut(s) if callable(r_cut) else r_cut
        slices.append(sample_slice(
            band, float(s), fields=(field,), k_max=0, r_cut=cut,
            source=source, grid=grid,
        ))
    return estimate_from_slices(slices, estimate, a, field)


# --- decay fits ---------------------------------------------------------------


@dataclass
class DecayFit:
    series_id: str
    exponent: float
    amplitude: float
    rms: float
    s_lo: float
    s_hi: float
    n_points: int

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def fit_decay(series, *, series_id="", s_min=None, s_max=None):
    """Least-squares (p, amplitude) for value ~ amplitude * s^p.

    Plain least squares on (log s, log value): rescaling the values shifts
    only the amplitude, never the exponent.  Needs >= 8 points inside the
    optional [s_min, s_max] window, all values positive.
    """
    arr = np.asarray([[float(s), float(v)] for s, v in series], dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("series must be (s, value) pairs")
    if s_min is not None:
        arr = arr[arr[:, 0] >= s_min]
    if s_max is not None:
        arr = arr[arr[:, 0] <= s_max]
    if arr.shape[0] < 8:
        raise ValueError(f"decay fit needs at least 8 points, got {arr.shape[0]}")
    bad = arr[:, 1] <= 0.0
    if np.any(bad):
        s_bad = arr[bad][0, 0]
        raise ValueError(f"non-positive value at s={s_bad:g}; fit needs value > 0")
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    x = np.log(arr[:, 0])
    y = np.log(arr[:, 1])
    xc = x - float(np.mean(x))
    denom = float(np.sum(xc * xc))
    if denom == 0.0:
        raise ValueError("all s values coincide; exponent undetermined")
    p = float(np.sum(xc * y)) / denom
    log_amp = float(np.mean(y)) - p * float(np.mean(x))
    resid = y - (log_amp + p * x)
    rms = math.sqrt(float(np.mean(resid * resid)))
    return DecayFit(
        series_id=series_id,
        exponent=p,
        amplitude=math.exp(log_amp),
        rms=rms,
        s_lo=float(arr[0, 0]),
        s_hi=float(arr[-1, 0]),
        n_points=int(arr.shape[0]),
    )


# --- pointwise sups -----------------------------------------------------------


def pointwise_sup(sdata, kind, field, a=0.5, word=((0, 0), 0)):
    """Weighted sup over the slice's quadrature nodes."""
    val = sdata.data[field][word][0]
    if val.size == 0:
        return 0.0
    tp = jbracket(sdata.sample.t + sdata.sample.r)
    if kind == "tau_half":
        wgt = np.sqrt(tp)
    elif kind == "tau_threehalf":
        wgt = tp * np.sqrt(tp)
    elif kind == "s_a_tau_half":
        wgt = sdata.sample.s ** a * np.sqrt(tp)
    else:
        raise ValueError(f"unknown tracker kind {kind!r} (choose from {TRACKER_KINDS})")
    return float(np.max(wgt * np.abs(val)))


def pointwise_tracker(band, kind, s, *, field=None, a=0.5, word=((0, 0), 0),
                      r_cut=None, grid=None):
    """pointwise_sup on a freshly sampled slice of a covered band."""
    if field is None:
        if len(band.fields) != 1:
            raise ValueError(f"band holds fields {band.fields}; name one")
        field = band.fields[0]
    k_max = word[0][0] + word[0][1] + word[1]
    sdata = sample_slice(band, float(s), fields=(field,), k_max=k_max,
                         r_cut=r_cut, grid=grid)
    return pointwise_sup(sdata, kind, field, a=a, word=word)
