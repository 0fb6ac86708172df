"""Quadrature on hyperboloids and every slice norm, fed from a FieldBand.

A hyperboloid labelled s is sampled at the radial grid nodes r_j (or 3d
cell centers), each at its own time t_j = sqrt(s^2 + r_j^2); field values
come from the band's four-slice time interpolation.  Radial integrals are
composite Simpson with the 4*pi*r^2 factor; every L2 piece is assembled in
the r-multiplied form 4*pi*(r*expr)^2, which stays smooth through r = 0
even for the conjugated members whose raw integrands carry 1/r (the
measure's r^2 cancels the pole, e.g. r * (pt + pr + p/r) -> p at the
axis), so the axis node needs no special casing.

Because a single hyperboloid spans times from s up to ~s^2/2, evaluating
against a short sliding band is done incrementally: a SliceSampler watches
the advancing run and evaluates each node the moment its time stencil is
covered, so norms over wide s-ranges never require the full history in
memory.

All reductions are fixed-order (numpy pairwise sums over arrays whose
entries are computed element-independently), so results are bit-identical
across worker counts.
"""

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from ._reduce import chunked_map, fixed_chunks, thread_count
from .geometry import cone_cut_radius
from .solver.band import BandCoverageError, operator_terms, evaluate_expansion

FOUR_PI = 4.0 * math.pi

NORM_KINDS = ("EW", "EKG", "EWa", "E1a", "E2a", "NWa_increment", "SuTau")


def support_cut_radius(s, t0, support_radius):
    """Largest r on slice s where a speed-1 cone from (t0, support) reaches.

    Data supported in r <= support_radius at time t0 stays inside
    r < support_radius + (t - t0); on the hyperboloid this cuts off at
    (s^2 - c0^2)/(2 c0) with c0 = t0 - support_radius.
    """
    c0 = t0 - support_radius
    if c0 <= 0:
        raise ValueError("support radius must stay below t0")
    if s <= c0:
        return 0.0
    return (s * s - c0 * c0) / (2.0 * c0)


def simpson_coefficients(n_nodes, h):
    """Positive composite Simpson weights on n_nodes uniform nodes.

    Even interval counts use plain Simpson; odd counts >= 3 end with a
    3/8 block; a single interval falls back to the trapezoid.
    """
    if n_nodes < 2:
        raise ValueError("quadrature needs at least two nodes")
    k = n_nodes - 1
    w = np.zeros(n_nodes)
    if k == 1:
        return np.array([0.5 * h, 0.5 * h])
    if k % 2 == 0:
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * (h / 3.0)
    # odd: Simpson on the first k-3 intervals, 3/8 rule on the last three
    if k >= 5:
        head = simpson_coefficients(k - 2, h)  # nodes 0 .. k-3
        w[: k - 2] = head
    tail = np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    w[k - 3 :] += tail
    return w


@dataclass(frozen=True)
class HyperboloidSample:
    """Quadrature nodes for one slice, confined to the cone region r < t-1.

    coef are the bare (positive) 1d/3d rule coefficients; weights are the
    dx-measure weights (radial: 4*pi*r^2*coef).  volume records the
    convention; dvol_weights() gives the (s/t)-reweighted set.
    """

    s: float
    mode: str
    nodes: np.ndarray  # radial: node indices j; 3d: (npts, 3) index array
    r: np.ndarray
    t: np.ndarray
    coef: np.ndarray
    weights: np.ndarray
    volume: str = "dx"
    r_cut: float = 0.0

    def dvol_weights(self):
        return self.weights * (self.s / self.t)

    @property
    def n_nodes(self):
        return self.r.size


def hyperboloid_quadrature(s, grid, r_cut=None, volume="dx"):
    """Nodes + weights for integrating over the slice inside the cone.

    The cut radius is the smallest of: the cone boundary (s^2-1)/2, the
    caller's r_cut (e.g. a support bound), and the grid's queryable range.
    """
    s = float(s)
    if s <= 1.0:
        raise ValueError("slices meet the cone region only for s > 1")
    if volume not in ("dx", "dvol"):
        raise ValueError(f"unknown volume convention {volume!r}")
    cone = cone_cut_radius(s)
    if grid.mode == "radial":
        h = grid.h
        lim = min(cone, grid.extent - 2 * h)
        if r_cut is not None:
            lim = min(lim, float(r_cut))
        J = int(math.floor(lim / h + 1e-9))
        while J * h >= cone - 1e-12:  # keep nodes strictly inside r < t-1
            J -= 1
        if J < 2:
            raise ValueError(
                f"slice s={s} leaves fewer than three nodes inside the cone "
                f"at h={h}; refine the grid or raise s"
            )
        j = np.arange(J + 1)
        r = j * h
        t = np.sqrt(s * s + r * r)
        coef = simpson_coefficients(J + 1, h)
        weights = FOUR_PI * r * r * coef
        if volume == "dvol":
            weights = weights * (s / t)
        return HyperboloidSample(s, "radial", j, r, t, coef, weights, volume, J * h)
    # 3d: midpoint rule over cells whose centers lie inside the cone
    h = grid.h
    m = grid.n_cells
    axis = -grid.extent + (np.arange(m) + 0.5) * h
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    R = np.sqrt(X * X + Y * Y + Z * Z)
    lim = min(cone, grid.extent - 2 * h)
    if r_cut is not None:
        lim = min(lim, float(r_cut))
    mask = R < lim
    idx = np.argwhere(mask)
    r = R[mask]
    order = np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0]))
    idx, r = idx[order], r[order]
    if r.size == 0:
        raise ValueError(f"no cells inside the cone for slice s={s}")
    t = np.sqrt(s * s + r * r)
    coef = np.full(r.size, h ** 3)
    weights = coef.copy()
    if volume == "dvol":
        weights = weights * (s / t)
    return HyperboloidSample(s, "cartesian3d", idx, r, t, coef, weights, volume, lim)


# --- node evaluation ---------------------------------------------------------


def derivative_words(k_max):
    """All ((n_t, n_r), J) words with total order <= k_max, fixed order."""
    words = []
    for total in range(k_max + 1):
        for nt in range(total + 1):
            for nr in range(total - nt + 1):
                words.append(((nt, nr), total - nt - nr))
    return words


def _eval_word_batch(band, field, word, t, j):
    """(value, d_t, d_r) of the word applied to the band field at nodes."""
    (nt, nr), J = word

    def apply(terms):
        return evaluate_expansion(
            terms, lambda a, b: band.sample_many(field, t, j, a, b), t, j * band.h
        )

    if J == 0:
        # plain partials: no polynomial coefficients to expand
        val = band.sample_many(field, t, j, nt, nr)
        dt = band.sample_many(field, t, j, nt + 1, nr)
        dr = band.sample_many(field, t, j, nt, nr + 1)
        return val, dt, dr
    val = apply(operator_terms((nt, nr), J))
    dt = apply(operator_terms((nt + 1, nr), J))
    dr = apply(operator_terms((nt, nr + 1), J))
    return val, dt, dr


def _eval_nodes(band, fields, words, t, j):
    """Evaluate all (field, word) triples at the nodes, chunk-parallel.

    Chunks split the node axis; every node is computed independently and
    the chunks are reassembled in fixed order, so the result is identical
    for any worker count.
    """
    n = t.size
    out = {f: {} for f in fields}
    chunks = fixed_chunks(n, max(1, min(thread_count() * 4, n // 256))) if n > 512 else [(0, n)]
    for f in fields:
        for w in words:
            parts = chunked_map(
                lambda lo, hi, _f=f, _w=w: _eval_word_batch(band, _f, _w, t[lo:hi], j[lo:hi]),
                chunks,
            )
            out[f][w] = tuple(np.concatenate([p[k] for p in parts]) for k in range(3))
    return out


@dataclass
class SliceData:
    """Evaluated node data on one hyperboloid: fields x derivative words."""

    sample: HyperboloidSample
    data: dict  # field -> word -> (val, d_t, d_r) arrays
    src: dict = dataclass_field(default_factory=dict)  # field -> F at nodes

    @property
    def s(self):
        return self.sample.s


def sample_slice(band, s, fields=None, k_max=0, r_cut=None, source=None, grid=None):
    """Evaluate a whole slice from a band that already covers its times."""
    if grid is None:
        from .solver.grid import GridSpec

        grid = GridSpec.from_dict(band.meta["grid"])
    fields = tuple(fields) if fields is not None else band.fields
    sample = hyperboloid_quadrature(s, grid, r_cut=r_cut)
    if band.mode != "radial":
        return _sample_slice_3d(band, sample, fields, source)
    words = derivative_words(k_max)
    j = sample.nodes.astype(int)
    data = _eval_nodes(band, fields, words, sample.t, j)
    src = {}
    if source is not None:
        for f in fields:
            fn = source if not isinstance(source, dict) else source.get(f)
            src[f] = (
                np.asarray(fn(sample.t, sample.r), dtype=float)
                if fn is not None
                else np.zeros_like(sample.r)
            )
    return SliceData(sample, data, src)


def _sample_slice_3d(band, sample, fields, source):
    idx = sample.nodes
    I, Jx, K = idx[:, 0], idx[:, 1], idx[:, 2]
    data = {}
    for f in fields:
        val = band.sample_many(f, sample.t, (I, Jx, K), 0, 0)
        dt = band.sample_many(f, sample.t, (I, Jx, K), 1, 0)
        grads = [
            band.sample_many(f, sample.t, (I, Jx, K), 0, 1, axis=ax) for ax in range(3)
        ]
        data[f] = {((0, 0), 0): (val, dt, tuple(grads))}
    src = {}
    if source is not None:
        for f in fields:
            fn = source if not isinstance(source, dict) else source.get(f)
            src[f] = (
                np.asarray(fn(sample.t, sample.r), dtype=float)
                if fn is not None
                else np.zeros_like(sample.r)
            )
    return SliceData(sample, data, src)


class SliceSampler:
    """Streams hyperboloid node evaluations out of an advancing run.

    Register it as the run's on_slice callback (or call on_slice after
    each push).  Each target slice's nodes are evaluated as soon as their
    time stencils fit in the band, so a depth-8 sliding band suffices for
    arbitrarily wide s-ranges.  results() hands back completed SliceData.
    """

    def __init__(self, grid, s_values, fields, k_max=0, r_cut=None, source=None):
        self.grid = grid
        self.fields = tuple(fields)
        self.words = derivative_words(k_max)
        self.source = source
        self._targets = []
        for s in s_values:
            cut = r_cut(s) if callable(r_cut) else r_cut
            sample = hyperboloid_quadrature(s, grid, r_cut=cut)
            store = {
                f: {w: tuple(np.zeros(sample.n_nodes) for _ in range(3)) for w in self.words}
                for f in self.fields
            }
            src = {}
            for f in self.fields:
                if self.source is None:
                    continue
                fn = self.source if not isinstance(self.source, dict) else self.source.get(f)
                src[f] = (
                    np.asarray(fn(sample.t, sample.r), dtype=float)
                    if fn is not None
                    else np.zeros(sample.n_nodes)
                )
            self._targets.append(
                {"sample": sample, "store": store, "src": src, "cursor": 0}
            )

    def on_slice(self, band, t=None):
        if band.n_slices < 4:
            return
        lead = band.t_front - 2.0 * band.dt + 1e-9 * band.dt
        for tg in self._targets:
            sample = tg["sample"]
            lo = tg["cursor"]
            if lo >= sample.n_nodes:
                continue
            hi = int(np.searchsorted(sample.t, lead, side="right"))
            if hi <= lo:
                continue
            if sample.t[lo] < band.t_back - 1e-9 * band.dt:
                raise BandCoverageError(
                    f"band slid past pending nodes of slice s={sample.s} "
                    f"(need t={sample.t[lo]:.6g}, band starts at {band.t_back:.6g}); "
                    "increase band_depth"
                )
            t_batch = sample.t[lo:hi]
            j_batch = sample.nodes[lo:hi].astype(int)
            got = _eval_nodes(band, self.fields, self.words, t_batch, j_batch)
            for f in self.fields:
                for w in self.words:
                    for k in range(3):
                        tg["store"][f][w][k][lo:hi] = got[f][w][k]
            tg["cursor"] = hi

    @property
    def pending(self):
        return sum(
            tg["sample"].n_nodes - tg["cursor"]
            for tg in self._targets
        )

    def results(self):
        out = []
        for tg in self._targets:
            sample = tg["sample"]
            if tg["cursor"] < sample.n_nodes:
                need = sample.t[sample.n_nodes - 1]
                raise BandCoverageError(
                    f"slice s={sample.s} incomplete: nodes up to t={need:.6g} "
                    f"were never covered (run longer, t_end beyond that + 2dt)"
                )
            out.append(SliceData(sample, tg["store"], tg["src"]))
        return out


# --- norms -------------------------------------------------------------------


def _l2_sq(coef, rexpr):
    """Integral of 4*pi*(r*expr)^2: fixed-order numpy pairwise sum."""
    return FOUR_PI * float(np.sum(coef * rexpr * rexpr))


def _geometry(sample):
    r, t, s = sample.r, sample.t, sample.s
    u = t - r
    ub = t + r
    tp = np.sqrt(1.0 + ub * ub)
    tm = np.sqrt(1.0 + u * u)
    st = s / t
    return r, t, u, ub, tp, tm, st


def _w1(a, tp, tm):
    """The fractional-energy weight 1 + a*tau_+^a * tau_0^max(a,1/2)."""
    return 1.0 + a * tp ** a * (tm / tp) ** max(a, 0.5)


def norm_value(kind, sdata, field, a=0.0, c_mass=1.0, word=((0, 0), 0)):
    """One norm kind on one slice, from already-evaluated node data.

    Radial mode only (the 3d mode offers EW/EKG via norms_3d).  The value
    is sqrt of the sum of squared L2 pieces; that convention (rather than
    summing unsquared norms) is fixed package-wide and flagged wherever a
    comparison against a summed form is made.
    """
    sample = sdata.sample
    if sample.mode != "radial":
        raise NotImplementedError("use norms_3d for cartesian3d slices")
    if kind not in NORM_KINDS:
        raise ValueError(f"unknown norm kind {kind!r}")
    p, pt, pr = sdata.data[field][word]
    r, t, u, ub, tp, tm, st = _geometry(sample)
    s = sample.s
    coef = sample.coef
    dlr = pr + (r / t) * pt  # adapted radial derivative, tangent to the slice

    if kind == "EW":
        return math.sqrt(_l2_sq(coef, r * st * pt) + _l2_sq(coef, r * dlr))
    if kind == "EKG":
        return math.sqrt(
            _l2_sq(coef, r * st * pt)
            + _l2_sq(coef, r * dlr)
            + c_mass * c_mass * _l2_sq(coef, r * p)
        )
    if kind == "EWa":
        w1 = _w1(a, tp, tm)
        return math.sqrt(
            _l2_sq(coef, w1 * r * st * pt)
            + _l2_sq(coef, s ** a * r * dlr)
            + a * a * _l2_sq(coef, (s ** a / t) * r * p)
        )
    if kind == "E1a":
        # conjugation by r: d^B_u(r phi)/r and d^B_r(r phi)/r; the second
        # carries p/r whose r-multiplied form r(pt+pr)+p is axis-smooth
        w1 = _w1(a, tp, tm)
        r_dU = r * pt
        r_dR = r * (pt + pr) + p
        return math.sqrt(
            _l2_sq(coef, w1 * st * r_dU) + _l2_sq(coef, tp ** a * r_dR)
        )
    if kind == "E2a":
        s2 = s * s
        dU = pt + 2.0 * t * p / s2
        dR = pt + pr + 2.0 * p / ub
        return math.sqrt(
            _l2_sq(coef, (1.0 + s ** (a - 1.0) * tm) * st * r * dU)
            + _l2_sq(coef, s ** (a - 1.0) * tp * r * dR)
        )
    if kind == "NWa_increment":
        F = sdata.src.get(field)
        if F is None:
            return 0.0
        return math.sqrt(_l2_sq(coef, tp ** a * st * r * F))
    if kind == "SuTau":
        return math.sqrt(_l2_sq(coef, (s ** a / tp) * r * p))
    raise AssertionError(kind)


def norms_3d(sdata, field, grid, c_mass=1.0):
    """EW and EKG on a 3d slice; other kinds are radial-only by design."""
    sample = sdata.sample
    val, dt, grads = sdata.data[field][((0, 0), 0)]
    t, s = sample.t, sample.s
    st = s / t
    w = sample.coef
    ew_sq = float(np.sum(w * (st * dt) ** 2))
    for ax in range(3):
        x = -grid.extent + (sample.nodes[:, ax] + 0.5) * grid.h
        adapted = grads[ax] + (x / t) * dt  # tangent to the slice
        ew_sq += float(np.sum(w * adapted * adapted))
    return {
        "EW": math.sqrt(ew_sq),
        "EKG": math.sqrt(ew_sq + c_mass * c_mass * float(np.sum(w * val * val))),
    }


def evaluate_norm(band, kind, s, field=None, a=0.0, c_mass=1.0, source=None,
                  word=((0, 0), 0), r_cut=None):
    """Norm on the slice, sampling the band directly (full coverage needed)."""
    field = field if field is not None else band.fields[0]
    k_max = word[0][0] + word[0][1] + word[1]
    sdata = sample_slice(
        band, s, fields=(field,), k_max=k_max, r_cut=r_cut, source=source
    )
    return norm_value(kind, sdata, field, a=a, c_mass=c_mass, word=word)


# --- inequality checks -------------------------------------------------------


@dataclass(frozen=True)
class RatioCheck:
    ratio: float
    degenerate: bool


def check_hardy(sdata, field, word=((0, 0), 0)):
    """|phi/r| in L2 against sqrt(3) * |adapted radial derivative| in L2."""
    sample = sdata.sample
    p, pt, pr = sdata.data[field][word]
    r, t = sample.r, sample.t
    dlr = pr + (r / t) * pt
    num = math.sqrt(_l2_sq(sample.coef, p))  # r * (phi / r) = phi
    den = math.sqrt(3.0) * math.sqrt(_l2_sq(sample.coef, r * dlr))
    if den < 1e-300 or num == 0.0 and den == 0.0:
        return RatioCheck(0.0, True)
    return RatioCheck(num / den, False)


def check_sobolev(sdata, field, a=0.0):
    """sup s^a tau_+^(1/2) |phi| against the boosted-derivative L2 sum.

    Needs sdata sampled with k_max >= 2 (the pure boost words).  The right
    side uses the package's root-sum-of-squares convention.
    """
    sample = sdata.sample
    r, t, u, ub, tp, tm, st = _geometry(sample)
    s = sample.s
    p = sdata.data[field][((0, 0), 0)][0]
    lhs = float(np.max(s ** a * np.sqrt(tp) * np.abs(p))) if p.size else 0.0
    rhs_sq = 0.0
    for J in (0, 1, 2):
        w = ((0, 0), J)
        if w not in sdata.data[field]:
            raise ValueError("check_sobolev needs boost words up to J=2")
        lj = sdata.data[field][w][0]
        rhs_sq += _l2_sq(sample.coef, (s ** a / t) * r * lj)
    rhs = math.sqrt(rhs_sq)
    if rhs < 1e-300:
        return RatioCheck(0.0, True)
    return RatioCheck(lhs / rhs, False)


# --- records and CSV ---------------------------------------------------------


@dataclass
class EnergyRecord:
    s: float
    field: str
    I: tuple
    J: int
    EW: float
    EKG: float
    EWa: float
    E1a: float
    E2a: float
    NWa_cum: float
    a: float
    grid_id: str


def slice_records(sdata, field, a, c_mass, grid_id, nwa_cum=0.0):
    """All (I, J) rows for one field on one slice; shares NWa_cum slice-wide."""
    records = []
    for word in sorted(sdata.data[field]):
        (nt, nr), J = word
        records.append(
            EnergyRecord(
                s=sdata.s,
                field=field,
                I=(nt, nr),
                J=J,
                EW=norm_value("EW", sdata, field, a=a, c_mass=c_mass, word=word),
                EKG=norm_value("EKG", sdata, field, a=a, c_mass=c_mass, word=word),
                EWa=norm_value("EWa", sdata, field, a=a, c_mass=c_mass, word=word),
                E1a=norm_value("E1a", sdata, field, a=a, c_mass=c_mass, word=word),
                E2a=norm_value("E2a", sdata, field, a=a, c_mass=c_mass, word=word),
                NWa_cum=nwa_cum,
                a=a,
                grid_id=grid_id,
            )
        )
    return records


CSV_HEADER = "s,EW,EKG,EWa,E1a,E2a,NWa_cum,a,I,J,grid_id"


def write_energy_csv(path, records, config_sha256="", artifact_version=None):
    """CSV with the frozen header; floats at 17 significant digits."""
    if artifact_version is None:
        from . import ARTIFACT_VERSION

        artifact_version = ARTIFACT_VERSION
    lines = [f"# wkgs-version={artifact_version} config-sha256={config_sha256}"]
    lines.append(CSV_HEADER)
    for rec in records:
        lines.append(
            f"{rec.s:.17g},{rec.EW:.17g},{rec.EKG:.17g},{rec.EWa:.17g},"
            f"{rec.E1a:.17g},{rec.E2a:.17g},{rec.NWa_cum:.17g},{rec.a:.17g},"
            f"{rec.I[0]}{rec.I[1]},{rec.J},{rec.grid_id}"
        )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_energy_csv(path):
    """Rows as dicts (floats parsed, I/J kept as strings) plus the meta line."""
    with open(path) as fh:
        meta = fh.readline().strip()
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            rows.append(
                {
                    "s": float(parts[0]),
                    "EW": float(parts[1]),
                    "EKG": float(parts[2]),
                    "EWa": float(parts[3]),
                    "E1a": float(parts[4]),
                    "E2a": float(parts[5]),
                    "NWa_cum": float(parts[6]),
                    "a": float(parts[7]),
                    "I": parts[8],
                    "J": parts[9],
                    "grid_id": parts[10],
                }
            )
    return meta, rows
