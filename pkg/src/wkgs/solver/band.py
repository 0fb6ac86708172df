"""Sliding band of constant-time field slices with interpolating queries.

The stepper appends (value, velocity) arrays per tracked field at uniformly
spaced times; readers reconstruct fields and mixed (t, x) partials anywhere
inside the retained window: cubic Lagrange interpolation across four
consecutive slices in time, centered second-order differences in space.
Because the first time derivative is co-evolved and stored, a query for
d_t^a only ever differentiates the interpolant (a-1) times, which keeps
second and third time derivatives at usable accuracy.

Also here: the product-rule expansion of derivative/boost words into pure
mixed partials with polynomial coefficients (commuted_field), and a binary
snapshot format with a bit-exact roundtrip.
"""

import json
import struct

import numpy as np


class BandCoverageError(RuntimeError):
    """A query needs slices or nodes outside the retained band."""


class SnapshotFormatError(RuntimeError):
    """Snapshot file is not readable: bad magic, version, or truncation."""


# monomial coefficients of the cubic Lagrange basis on xi in {0,1,2,3};
# row i holds L_i = c0 + c1*xi + c2*xi^2 + c3*xi^3
_LAGRANGE = np.array(
    [
        [1.0, -11.0 / 6.0, 1.0, -1.0 / 6.0],
        [0.0, 3.0, -2.5, 0.5],
        [0.0, -1.5, 2.0, -0.5],
        [0.0, 1.0 / 3.0, -0.5, 1.0 / 6.0],
    ]
)


def _lagrange_weights(xi, order):
    """Weights of the 4-point interpolant (or its xi-derivatives) at xi.

    Evaluated per element by Horner's rule rather than a matmul: BLAS
    picks different kernels for different batch sizes, which would break
    the bit-for-bit batch-size invariance the energy pipeline relies on.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.empty(xi.shape + (4,))
    for i in range(4):
        c0, c1, c2, c3 = _LAGRANGE[i]
        if order == 0:
            out[..., i] = c0 + xi * (c1 + xi * (c2 + xi * c3))
        elif order == 1:
            out[..., i] = c1 + xi * (2.0 * c2 + xi * (3.0 * c3))
        elif order == 2:
            out[..., i] = 2.0 * c2 + xi * (6.0 * c3)
        else:
            raise ValueError(f"interpolant derivative order {order} not supported")
    return out


# centered stencils on a 5-node window, to be divided by h**order;
# orders 1 and 2 are the 4th-order 5-point rules (so that norm sampling
# error sits well below the solver's own h^2), order 3 is the widest
# (2nd-order) third derivative a 5-node window admits
_SPATIAL_ROWS = {
    0: np.array([0.0, 0.0, 1.0, 0.0, 0.0]),
    1: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
    2: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
    3: np.array([-0.5, 1.0, 0.0, -1.0, 0.5]),
}


class FieldBand:
    """Uniform-dt window of per-field (value, velocity) slices.

    Single writer (the stepper) appends via push_slice; any number of
    readers may query.  depth == 0 retains the full history, depth >= 4
    keeps a sliding window of that many slices.  Radial-mode fields are
    even in r, so spatial stencils reflect across the axis.
    """

    def __init__(self, mode, fields, h, dt, shape, depth=8, meta=None):
        if mode not in ("radial", "cartesian3d"):
            raise ValueError(f"unknown band mode {mode!r}")
        if depth != 0 and depth < 4:
            raise ValueError("band depth must be 0 (keep all) or >= 4")
        if dt <= 0 or h <= 0:
            raise ValueError("h and dt must be positive")
        self.mode = mode
        self.fields = tuple(fields)
        self.h = float(h)
        self.dt = float(dt)
        self.shape = tuple(shape)
        self.depth = int(depth)
        self.meta = dict(meta) if meta else {}
        self._times = []
        self._values = {f: [] for f in self.fields}
        self._velocities = {f: [] for f in self.fields}
        self._pushes = 0
        self._t_origin = None  # first time ever pushed (survives sliding)
        self._n_popped = 0
        self._stack_cache = {}

    # --- writing ----------------------------------------------------------

    def push_slice(self, t, data):
        """Append one slice: data maps field -> (value_array, velocity_array)."""
        t = float(t)
        if self._times:
            expected = self._times[-1] + self.dt
            if abs(t - expected) > 1e-9 * max(1.0, abs(expected)):
                raise ValueError(
                    f"slice time {t} breaks uniform spacing (expected {expected})"
                )
        for f in self.fields:
            val, vel = data[f]
            val = np.array(val, dtype=float, copy=True)
            vel = np.array(vel, dtype=float, copy=True)
            if val.shape != self.shape or vel.shape != self.shape:
                raise ValueError(
                    f"slice arrays for {f!r} have shape {val.shape}, band needs {self.shape}"
                )
            self._values[f].append(val)
            self._velocities[f].append(vel)
        if self._t_origin is None:
            self._t_origin = t
        self._times.append(t)
        if self.depth and len(self._times) > self.depth:
            self._times.pop(0)
            for f in self.fields:
                self._values[f].pop(0)
                self._velocities[f].pop(0)
            self._n_popped += 1
        self._pushes += 1
        self._stack_cache.clear()

    # --- reading ----------------------------------------------------------

    @property
    def times(self):
        return np.array(self._times)

    @property
    def n_slices(self):
        return len(self._times)

    @property
    def t_back(self):
        return self._times[0]

    @property
    def t_front(self):
        return self._times[-1]

    def covers(self, t):
        if len(self._times) < 4:
            return False
        eps = 1e-9 * self.dt
        return self._times[0] - eps <= float(t) <= self._times[-1] + eps

    def _stacked(self, field):
        cached = self._stack_cache.get(field)
        if cached is not None and cached[0] == self._pushes:
            return cached[1], cached[2]
        flat = int(np.prod(self.shape))
        vals = np.stack([a.reshape(flat) for a in self._values[field]])
        vels = np.stack([a.reshape(flat) for a in self._velocities[field]])
        self._stack_cache[field] = (self._pushes, vals, vels)
        return vals, vels

    def _time_stencil(self, t):
        """4-slice window start index and local coordinate for each t.

        The coordinate is taken against the first time ever pushed, not
        the current window edge, so a value sampled from a sliding band
        is bit-identical to the same value sampled from a keep-all band.
        """
        m = len(self._times)
        if m < 4:
            raise BandCoverageError(
                f"band holds {m} slice(s); >= 4 needed for time interpolation"
            )
        t = np.asarray(t, dtype=float)
        pos = (t - self._t_origin) / self.dt
        n_total = self._n_popped + m
        eps = 1e-9
        lo, hi = self._n_popped - eps, n_total - 1 + eps
        if np.any(pos < lo) or np.any(pos > hi):
            bad = float(np.atleast_1d(t)[np.argmax((pos < lo) | (pos > hi))])
            raise BandCoverageError(
                f"time {bad} outside retained band "
                f"[{self._times[0]}, {self._times[-1]}]"
            )
        k_abs = np.clip(np.floor(pos).astype(int) - 1, 0, n_total - 4)
        k0 = k_abs - self._n_popped
        if np.any(k0 < 0):
            bad = float(np.atleast_1d(t)[np.argmax(k0 < 0)])
            raise BandCoverageError(
                f"the interpolation window for time {bad} has slid out of the "
                f"band (retained times start at {self._times[0]}); sample "
                "sooner or increase band_depth"
            )
        return k0, pos - k_abs

    def _time_combined(self, field, t, dt_order):
        """(weights, source) pair: weights (npts,4), source 2d stack."""
        vals, vels = self._stacked(field)
        k0, xi = self._time_stencil(t)
        if dt_order == 0:
            return k0, _lagrange_weights(xi, 0), vals
        scale = self.dt ** (dt_order - 1)
        return k0, _lagrange_weights(xi, dt_order - 1) / scale, vels

    def sample_many(self, field, t, idx, dt_order=0, dx_order=0, axis=0):
        """Mixed partial d_t^a d_x^b field at nodes idx, times t (arrays).

        Radial mode: idx is the node index j (r = j*h), axis ignored.
        3d mode: idx is an (i, j, k) tuple of index arrays and the spatial
        derivative acts along `axis`; mixed spatial partials are not offered.
        Time orders 0..3 (0,1 exact from stored slices), spatial orders 0..3.
        """
        if dt_order not in (0, 1, 2, 3):
            raise ValueError(f"time derivative order {dt_order} not supported")
        if dx_order not in _SPATIAL_ROWS:
            raise ValueError(f"spatial derivative order {dx_order} not supported")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k0, tw, source = self._time_combined(field, t, dt_order)
        row = _SPATIAL_ROWS[dx_order] / self.h ** dx_order
        offs = np.arange(-2, 3)
        if self.mode == "radial":
            j = np.atleast_1d(np.asarray(idx, dtype=int))
            n_max = self.shape[0] - 1
            jj = np.abs(j[:, None] + offs[None, :])  # even reflection at axis
            if np.any(j < 0) or np.any(jj > n_max):
                raise BandCoverageError(
                    "spatial stencil leaves the grid (outer edge); "
                    f"need nodes up to {int(jj.max())}, grid ends at {n_max}"
                )
            flat = jj
        else:
            ijk = [np.atleast_1d(np.asarray(c, dtype=int)) for c in idx]
            widened = []
            for ax, c in enumerate(ijk):
                if ax == axis and dx_order > 0:
                    w = c[:, None] + offs[None, :]
                else:
                    w = np.repeat(c[:, None], 5, axis=1)
                if np.any(w < 0) or np.any(w >= self.shape[ax]):
                    raise BandCoverageError("spatial stencil leaves the box")
                widened.append(w)
            flat = np.ravel_multi_index(
                tuple(w for w in widened), self.shape, mode="raise"
            )
        gathered = source[k0[:, None, None] + np.arange(4)[None, :, None], flat[:, None, :]]
        return np.einsum("pij,pi,j->p", gathered, tw, row)

    def sample(self, field, t, x, dt_order=0, dx_order=0):
        """Scalar query at arbitrary radial (t, x): cubic in t and in x."""
        if self.mode != "radial":
            raise NotImplementedError("free-position queries are radial-mode only")
        x = float(x)
        if x < 0:
            raise ValueError("radial coordinate must be >= 0")
        j = int(round(x / self.h))
        if abs(x - j * self.h) <= 1e-9 * max(self.h, x):
            return float(self.sample_many(field, [t], [j], dt_order, dx_order)[0])
        if dx_order > 2:
            raise ValueError("off-node queries support spatial order <= 2")
        n_max = self.shape[0] - 1
        j0 = int(np.clip(np.floor(x / self.h) - 1, 0, n_max - 3))
        if j0 + 3 > n_max:
            raise BandCoverageError("spatial stencil leaves the grid (outer edge)")
        eta = x / self.h - j0
        xw = _lagrange_weights(np.array([eta]), dx_order)[0] / self.h ** dx_order
        k0, tw, source = self._time_combined(field, np.array([float(t)]), dt_order)
        window = source[k0[0] : k0[0] + 4, j0 : j0 + 4]
        return float(tw[0] @ window @ xw)

    def frame(self, field, t, dt_order=0):
        """Full-array time interpolation at t (shape = band.shape)."""
        k0, tw, source = self._time_combined(field, np.array([float(t)]), dt_order)
        out = tw[0] @ source[k0[0] : k0[0] + 4]
        return out.reshape(self.shape)


# --- operator words: expansion of d^I L^J into pure partials ---------------


def _merge_poly(dst, poly, scale=1.0):
    for mono, c in poly.items():
        val = dst.get(mono, 0.0) + scale * c
        if val == 0.0:
            dst.pop(mono, None)
        else:
            dst[mono] = val


def _merge_term(terms, key, poly, scale=1.0):
    slot = terms.setdefault(key, {})
    _merge_poly(slot, poly, scale)
    if not slot:
        del terms[key]


def _apply_partial(terms, which):
    """d_t (which=0) or d_r (which=1) applied by the product rule."""
    out = {}
    for (a, b), poly in terms.items():
        dpoly = {}
        for (pt, pr), c in poly.items():
            if which == 0 and pt > 0:
                dpoly[(pt - 1, pr)] = dpoly.get((pt - 1, pr), 0.0) + c * pt
            if which == 1 and pr > 0:
                dpoly[(pt, pr - 1)] = dpoly.get((pt, pr - 1), 0.0) + c * pr
        if dpoly:
            _merge_term(out, (a, b), dpoly)
        key = (a + 1, b) if which == 0 else (a, b + 1)
        _merge_term(out, key, poly)
    return out

def _apply_boost(terms):
    """Radial boost L = t d_r + r d_t applied by the product rule."""
    out = {}
    for (a, b), poly in terms.items():
        coeff = {}
        tpoly = {}
        rpoly = {}
        for (pt, pr), c in poly.items():
            if pr > 0:  # t * d_r(coefficient)
                coeff[(pt + 1, pr - 1)] = coeff.get((pt + 1, pr - 1), 0.0) + c * pr
            if pt > 0:  # r * d_t(coefficient)
                coeff[(pt - 1, pr + 1)] = coeff.get((pt - 1, pr + 1), 0.0) + c * pt
            tpoly[(pt + 1, pr)] = c
            rpoly[(pt, pr + 1)] = c
        if coeff:
            _merge_term(out, (a, b), coeff)
        _merge_term(out, (a, b + 1), tpoly)
        _merge_term(out, (a + 1, b), rpoly)
    return out


def operator_terms(I, J):
    """Expand d_t^{I[0]} d_r^{I[1]} L^J into {(a,b): {(pt,pr): coef}}.

    Keys (a, b) are mixed-partial orders in (t, r); each maps to the
    polynomial coefficient sum c * t^pt * r^pr.  The boosts act first
    (innermost), then the plain partials.
    """
    nt, nr = int(I[0]), int(I[1])
    if nt < 0 or nr < 0 or int(J) < 0:
        raise ValueError("operator word exponents must be >= 0")
    terms = {(0, 0): {(0, 0): 1.0}}
    for _ in range(int(J)):
        terms = _apply_boost(terms)
    for _ in range(nr):
        terms = _apply_partial(terms, 1)
    for _ in range(nt):
        terms = _apply_partial(terms, 0)
    return terms


def evaluate_expansion(terms, partials, t, r):
    """Sum coef(t,r) * partials(a, b) over the expansion, fixed order.

    partials(a, b) must return the mixed partial d_t^a d_r^b of the field
    at the query points (broadcastable with t, r).
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    total = 0.0
    for (a, b) in sorted(terms):
        coef = 0.0
        for (pt, pr) in sorted(terms[(a, b)]):
            coef = coef + terms[(a, b)][(pt, pr)] * t ** pt * r ** pr
        total = total + coef * partials(a, b)
    return total


def commuted_field(band, field, I, J, t, x, k_max=2):
    """Value of the derivative/boost word d^I L^J applied to a band field.

    I = (n_t, n_r) counts plain partials, J counts radial boosts
    L = t d_r + r d_t.  The word is expanded by the product rule into pure
    mixed partials with polynomial coefficients and evaluated from the band
    (cubic interpolant in t, centered differences in r).  x must sit on
    grid nodes.  Accepts scalars or arrays for (t, x).
    """
    if band.mode != "radial":
        raise NotImplementedError("commuted queries are radial-mode only")
    nt, nr = int(I[0]), int(I[1])
    if nt + nr + int(J) > k_max:
        raise ValueError(f"|I|+|J| = {nt + nr + int(J)} exceeds k_max = {k_max}")
    scalar_in = np.ndim(t) == 0 and np.ndim(x) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t, x = np.broadcast_arrays(t, x)
    j = np.round(x / band.h).astype(int)
    if np.any(np.abs(x - j * band.h) > 1e-9 * np.maximum(band.h, np.abs(x))):
        raise ValueError("commuted queries require x on grid nodes")
    terms = operator_terms((nt, nr), J)
    out = evaluate_expansion(
        terms, lambda a, b: band.sample_many(field, t, j, a, b), t, x
    )
    return float(out[0]) if scalar_in else out


# --- snapshots --------------------------------------------------------------

_MAGIC = b"WKGS"
_FORMAT_VERSION = 1


def write_snapshot(band, path):
    """Serialize the band: magic, version, JSON header, then raw '<f8' arrays."""
    header = {
        "mode": band.mode,
        "fields": list(band.fields),
        "h": band.h,
        "dt": band.dt,
        "depth": band.depth,
        "shape": list(band.shape),
        "times": [float(x) for x in band._times],
        "t_origin": band._t_origin,
        "n_popped": band._n_popped,
        "dtype": "<f8",
        "order": "C",
        "meta": band.meta,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for i in range(len(band._times)):
            for f in band.fields:
                fh.write(band._values[f][i].astype("<f8", copy=False).tobytes("C"))
                fh.write(band._velocities[f][i].astype("<f8", copy=False).tobytes("C"))


def read_snapshot(path):
    """Rebuild a FieldBand from a snapshot; bit-exact inverse of write."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise SnapshotFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        head = fh.read(12)
        if len(head) < 12:
            raise SnapshotFormatError("truncated header")
        (version,) = struct.unpack("<I", head[:4])
        if version != _FORMAT_VERSION:
            raise SnapshotFormatError(
                f"unsupported format version {version} (reader supports {_FORMAT_VERSION})"
            )
        (hlen,) = struct.unpack("<Q", head[4:12])
        blob = fh.read(hlen)
        if len(blob) < hlen:
            raise SnapshotFormatError("truncated header")
        try:
            header = json.loads(blob.decode("utf-8"))
        except ValueError as exc:
            raise SnapshotFormatError(f"unreadable header: {exc}") from None
        shape = tuple(header["shape"])
        count = int(np.prod(shape))
        band = FieldBand(
            header["mode"],
            header["fields"],
            header["h"],
            header["dt"],
            shape,
            depth=header["depth"],
            meta=header.get("meta"),
        )
        nbytes = count * 8
        for t in header["times"]:
            data = {}
            for f in band.fields:
                raw_val = fh.read(nbytes)
                raw_vel = fh.read(nbytes)
                if len(raw_val) < nbytes or len(raw_vel) < nbytes:
                    raise SnapshotFormatError("truncated slice data")
                data[f] = (
                    np.frombuffer(raw_val, dtype="<f8").reshape(shape),
                    np.frombuffer(raw_vel, dtype="<f8").reshape(shape),
                )
            band.push_slice(t, data)
    # restore the absolute sampling frame of a band that had already slid
    if header.get("t_origin") is not None:
        band._t_origin = float(header["t_origin"])
        band._n_popped = int(header["n_popped"])
    return band
