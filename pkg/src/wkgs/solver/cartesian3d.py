"""Coarse 3+1 Cartesian evolution (RK4, 2nd-order stencils).

Fields live at cell centers x_i = -extent + (i + 1/2) h of an m^3 box,
h = 2*extent/m, and are stepped as the first-order system (phi, pi) with
classical RK4.  Spatial stencils are the 7-point Laplacian and centered
first/mixed differences with a zero exterior, which is exact as long as
the support never reaches the box edge -- enforced up front from the data
support radius, the source support, and the travel time.

In this mode the full symmetric coupling matrices are honored:
P^{ab} d_a v d_b v and u H^{ab} d_a d_b v with a, b in {t, x, y, z};
the H-block's pure second time derivative is lagged as in the radial mode.
"""

import numpy as np

from .band import FieldBand
from .radial import NumericalAbort, SupportEscapeError


def _shift(arr, axis, off):
    """arr displaced by off cells along axis, zero-filled exterior."""
    out = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if off > 0:
        src[axis] = slice(off, None)
        dst[axis] = slice(None, -off)
    elif off < 0:
        src[axis] = slice(None, off)
        dst[axis] = slice(-off, None)
    else:
        return arr.copy()
    out[tuple(dst)] = arr[tuple(src)]
    return out


def _laplacian(arr, h):
    out = -6.0 * arr
    for ax in range(3):
        out = out + _shift(arr, ax, 1) + _shift(arr, ax, -1)
    return out / (h * h)


def _d1(arr, axis, h):
    return (_shift(arr, axis, 1) - _shift(arr, axis, -1)) / (2.0 * h)


def _d2(arr, ax1, ax2, h):
    if ax1 == ax2:
        return (_shift(arr, ax1, 1) - 2.0 * arr + _shift(arr, ax1, -1)) / (h * h)
    return _d1(_d1(arr, ax1, h), ax2, h)


class Cartesian3dRun:
    """Run handle for the 3+1 mode; mirrors the radial handle's API."""

    def __init__(self, model, grid, data):
        if grid.mode != "cartesian3d":
            raise ValueError(
                f"3d evolution needs mode='cartesian3d', got {grid.mode!r}"
            )
        self.model = model
        self.grid = grid
        self.m = grid.n_cells
        self.h = grid.h
        self.dt = grid.dt
        self.t = grid.t0
        self.step_index = 0

        sup = float(data.support_radius)
        if sup > grid.t0 - 1.05:
            raise ValueError(
                f"data support radius {sup} exceeds t0 - 1.05 = {grid.t0 - 1.05}"
            )
        self.steps_total = int(np.ceil((grid.t_end - grid.t0) / self.dt - 1e-9))
        src_sup = data.source_radius if data.source_radius is not None else sup
        reach = max(sup, src_sup) + self.steps_total * self.dt
        if reach > grid.extent - 3 * self.h:
            raise SupportEscapeError(
                f"support would reach |x| = {reach:.3f} by t_end, box half-width "
                f"is {grid.extent} (stencil margin 3h)"
            )

        axis = -grid.extent + (np.arange(self.m) + 0.5) * self.h
        X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
        self.radius = np.sqrt(X * X + Y * Y + Z * Z)
        self.fields = model.fields
        self.phi = {
            f: np.asarray(data.values[f](self.radius), dtype=float)
            for f in self.fields
        }
        self.pi = {
            f: np.asarray(data.velocities[f](self.radius), dtype=float)
            for f in self.fields
        }
        self._source = model.source_fn()
        self._lag = None

        self.band = FieldBand(
            "cartesian3d",
            self.fields,
            self.h,
            self.dt,
            (self.m, self.m, self.m),
            depth=grid.band_depth,
            meta={"grid": grid.to_dict(), "model": model.to_dict()},
        )
        self._push()

    def _matrices(self):
        p = self.model.params
        if p.p_full is not None:
            P = np.array(p.p_full, dtype=float)
        else:
            P = np.diag([p.P00, p.Piso, p.Piso, p.Piso])
        if p.h_full is not None:
            H = np.array(p.h_full, dtype=float)
        else:
            H = np.diag([p.H00, p.Hiso, p.Hiso, p.Hiso])
        return P, H

    def _accel(self, t, phi, pi):
        kind = self.model.kind
        p = self.model.params
        h = self.h
        acc = {}
        if kind == "linear_wave":
            a = _laplacian(phi["phi"], h)
            if self._source is not None:
                a = a + self._source(t, self.radius)
            acc["phi"] = a
        elif kind == "klein_gordon":
            c2 = p.c_mass * p.c_mass
            a = _laplacian(phi["v"], h) - c2 * phi["v"]
            if self._source is not None:
                a = a + self._source(t, self.radius)
            acc["v"] = a
        elif kind == "coupled":
            c2 = p.c_mass * p.c_mass
            P, H = self._matrices()
            v, vp = phi["v"], pi["v"]
            grad_v = [_d1(v, ax, h) for ax in range(3)]
            quad = P[0, 0] * vp * vp
            for i in range(3):
                quad = quad + 2.0 * P[0, i + 1] * vp * grad_v[i]
                for j in range(3):
                    quad = quad + P[i + 1, j + 1] * grad_v[i] * grad_v[j]
            quad = quad + p.R_coupling * v * v
            acc["u"] = _laplacian(phi["u"], h) + quad

            lap_v = _laplacian(v, h)
            # H-block sans the pure-tt entry (which is lagged)
            hv = np.zeros_like(v)
            for i in range(3):
                if H[0, i + 1] != 0.0:
                    hv = hv + 2.0 * H[0, i + 1] * _d1(vp, i, h)
                for j in range(i, 3):
                    coef = H[i + 1, j + 1] * (1.0 if i == j else 2.0)
                    if coef != 0.0:
                        hv = hv + coef * _d2(v, i, j, h)
            if self._lag is None:
                denom = 1.0 - phi["u"] * H[0, 0]
                if np.any(np.abs(denom) < 0.5):
                    raise NumericalAbort(
                        "quasilinear factor 1 - u*H00 left the hyperbolic "
                        "regime on the initial slice"
                    )
                acc["v"] = (lap_v - c2 * v + phi["u"] * hv) / denom
            else:
                acc["v"] = lap_v - c2 * v + phi["u"] * (H[0, 0] * self._lag + hv)
            self._lag = acc["v"]
        else:
            raise ValueError(f"unknown model kind {kind!r}")
        return acc

    def _push(self):
        self.band.push_slice(
            self.t, {f: (self.phi[f], self.pi[f]) for f in self.fields}
        )

    def advance(self):
        """One RK4 step; pushes the new slice into the band."""
        if self.step_index >= self.steps_total:
            raise RuntimeError("run already reached t_end")
        dt, t = self.dt, self.t
        F = self.fields

        def rhs(tq, phi, pi):
            acc = self._accel(tq, phi, pi)
            return pi, acc

        k1p, k1v = rhs(t, self.phi, self.pi)
        k2p, k2v = rhs(
            t + 0.5 * dt,
            {f: self.phi[f] + 0.5 * dt * k1p[f] for f in F},
            {f: self.pi[f] + 0.5 * dt * k1v[f] for f in F},
        )
        k3p, k3v = rhs(
            t + 0.5 * dt,
            {f: self.phi[f] + 0.5 * dt * k2p[f] for f in F},
            {f: self.pi[f] + 0.5 * dt * k2v[f] for f in F},
        )
        k4p, k4v = rhs(
            t + dt,
            {f: self.phi[f] + dt * k3p[f] for f in F},
            {f: self.pi[f] + dt * k3v[f] for f in F},
        )
        for f in F:
            self.phi[f] = self.phi[f] + (dt / 6.0) * (
                k1p[f] + 2.0 * k2p[f] + 2.0 * k3p[f] + k4p[f]
            )
            self.pi[f] = self.pi[f] + (dt / 6.0) * (
                k1v[f] + 2.0 * k2v[f] + 2.0 * k3v[f] + k4v[f]
            )
        self.t = self.grid.t0 + (self.step_index + 1) * dt
        self.step_index += 1
        for f in F:
            if not np.all(np.isfinite(self.phi[f])):
                raise NumericalAbort(
                    f"non-finite value in field {f!r} at step {self.step_index}, "
                    f"t = {self.t:.6g}"
                )
        self._push()
        return self.t

    @property
    def done(self):
        return self.step_index >= self.steps_total

    def __iter__(self):
        while not self.done:
            yield self.advance()

    def run_to_end(self, on_slice=None):
        for t in self:
            if on_slice is not None:
                on_slice(self.band, t)
        return self.band
