"""Spherically symmetric evolution via the r-weighted reduction.

Each field phi is evolved as psi = r*phi on the uniform node grid
r_j = j*h, where the radial Laplacian collapses:

    wave:  psi_tt = psi_rr + r*F
    KG:    psi_tt = psi_rr - c^2 psi + r*F

The quadratic/quasilinear couplings of the two-field model enter as
r-weighted sources; the second-derivative coupling u*(H00 v_tt + ...)
is lagged one evaluation (explicit treatment, fine while |u| stays small).
psi is odd in r with psi(t, 0) = 0 pinned, so the scheme never divides by
r: phi-values pushed to the band use the one-sided axis limit
phi(t,0) = psi_r(t,0) = (8 psi_1 - psi_2)/(6h).

Time stepping is velocity Verlet (kick-drift-kick) with a velocity
predictor in the final kick so velocity-dependent sources stay second
order.  Finite speed of propagation is enforced up front: the data (and
any source) support plus the travel time must stay clear of the outer
edge, otherwise the run refuses to start.
"""

import numpy as np

from .band import FieldBand
from .grid import GridSpec
from .manufactured import manufactured_case

SUPPORT_MARGIN = 1.05  # required gap between data support and the unit cone


class SupportEscapeError(RuntimeError):
    """Field support would reach the outer grid edge before t_end."""


class NumericalAbort(RuntimeError):
    """Non-finite values appeared during the evolution."""


class InitialData:
    """Initial values and velocities per field on the t = t0 slice.

    values / velocities map field name -> vectorized callable of r;
    support_radius bounds the union of their supports.  source_radius
    optionally bounds the support of the model's source term for all
    times (defaults to the data cone).
    """

    def __init__(self, values, velocities, support_radius, source_radius=None):
        self.values = dict(values)
        self.velocities = dict(velocities)
        self.support_radius = float(support_radius)
        self.source_radius = None if source_radius is None else float(source_radius)


def case_data(case, t0, field=None):
    """InitialData for a manufactured case, traced on the slice t = t0."""
    if isinstance(case, str):
        case = manufactured_case(case)
    name = field if field is not None else ("v" if case.eq == "kg" else "phi")
    t0 = float(t0)
    values = {name: lambda r: case.phi(t0, r)}
    velocities = {name: lambda r: case.phi_t(t0, r)}
    # the forced cases keep a time-independent source support
    src = case.support_radius(t0) if case.forcing is not None else None
    return InitialData(values, velocities, case.support_radius(t0), source_radius=src)


def zero_data(fields, support_radius=1.0):
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return InitialData(
        {f: zero for f in fields}, {f: zero for f in fields}, support_radius
    )


def radial_bump(amplitude, width, power=8):
    """Smooth even bump amplitude*(1 - (r/width)^2)^power, zero outside."""

    def profile(r):
        r = np.asarray(r, dtype=float)
        y = np.maximum(1.0 - (r / width) ** 2, 0.0)
        return amplitude * y ** power

    return profile


def outgoing_shell(amplitude, u_lo, u_hi, t0, power=8):
    """Trace of a purely outgoing pulse psi = F(t-r) on the slice t = t0.

    F is a compact C^(power-1) bump supported in u = t-r in [u_lo, u_hi],
    so phi = F(t0-r)/r, phi_t = F'(t0-r)/r are exact free-wave data with
    no incoming part — the pulse travels outward without revisiting the
    axis (F(t) = 0 for t >= t0 > u_hi keeps the pinned center exact).
    Returns (value_fn, velocity_fn, support_radius).
    """
    u_lo, u_hi, t0 = float(u_lo), float(u_hi), float(t0)
    if not 1.0 < u_lo < u_hi < t0:
        raise ValueError(
            f"shell needs 1 < u_lo < u_hi < t0, got ({u_lo}, {u_hi}) at t0={t0}"
        )
    mid = 0.5 * (u_lo + u_hi)
    half = 0.5 * (u_hi - u_lo)

    def F(u):
        y = np.maximum(1.0 - ((u - mid) / half) ** 2, 0.0)
        return amplitude * y ** power

    def Fd(u):
        y = np.maximum(1.0 - ((u - mid) / half) ** 2, 0.0)
        return amplitude * power * y ** (power - 1) * (-2.0 * (u - mid) / half ** 2)

    def over_r(f):
        def profile(r):
            r = np.asarray(r, dtype=float)
            num = f(t0 - r)
            out = np.zeros_like(num)
            # support keeps r >= t0 - u_hi > 0 wherever num != 0
            np.divide(num, r, out=out, where=num != 0.0)
            return out

        return profile

    return over_r(F), over_r(Fd), t0 - u_lo


class RadialRun:
    """Run handle: owns the state arrays and streams slices into a band."""

    def __init__(self, model, grid, data):
        if grid.mode != "radial":
            raise ValueError(f"radial evolution needs mode='radial', got {grid.mode!r}")
        self.model = model
        self.grid = grid
        self.h = grid.h
        self.dt = grid.dt
        self.n = grid.n_cells
        self.t = grid.t0
        self.step_index = 0

        sup = float(data.support_radius)
        if sup > grid.t0 - SUPPORT_MARGIN:
            raise ValueError(
                f"data support radius {sup} exceeds t0 - {SUPPORT_MARGIN} = "
                f"{grid.t0 - SUPPORT_MARGIN}; compact support inside the "
                "unit-shifted cone is required"
            )
        self.steps_total = int(np.ceil((grid.t_end - grid.t0) / self.dt - 1e-9))
        src_sup = data.source_radius if data.source_radius is not None else sup
        reach = max(sup, src_sup) + self.steps_total * self.dt
        if reach > grid.extent - 3 * self.h:
            raise SupportEscapeError(
                f"support would reach r = {reach:.3f} by t_end, grid extends "
                f"to {grid.extent} (stencil margin 3h); enlarge extent or "
                "shorten the run"
            )

        self.r = np.arange(self.n + 1) * self.h
        self.fields = model.fields
        self.psi = {f: self.r * np.asarray(data.values[f](self.r), dtype=float)
                    for f in self.fields}
        self.pi = {f: self.r * np.asarray(data.velocities[f](self.r), dtype=float)
                   for f in self.fields}
        for f in self.fields:
            self.psi[f][0] = 0.0
            self.pi[f][0] = 0.0
        self._source = model.source_fn()
        self._lag = None  # previous psi-acceleration of the KG field (coupled)
        self._accel_prev = self._accel(self.t, self.psi, self.pi)

        self.band = FieldBand(
            "radial",
            self.fields,
            self.h,
            self.dt,
            (self.n + 1,),
            depth=grid.band_depth,
            meta={"grid": grid.to_dict(), "model": model.to_dict()},
        )
        self._push()

    # --- spatial operators -------------------------------------------------

    def _psi_rr(self, psi):
        out = np.zeros_like(psi)
        out[1:-1] = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / (self.h * self.h)
        return out

    def _axis_ratio(self, arr):
        """arr/r with the 4th-order one-sided limit at r = 0 (arr odd)."""
        out = np.empty_like(arr)
        out[1:] = arr[1:] / self.r[1:]
        out[0] = (8.0 * arr[1] - arr[2]) / (6.0 * self.h)
        return out

    # --- right-hand sides ---------------------------------------------------

    def _accel(self, t, psi, pi):
        kind = self.model.kind
        p = self.model.params
        acc = {}
        if kind == "linear_wave":
            a = self._psi_rr(psi["phi"])
            if self._source is not None:
                a = a + self.r * self._source(t, self.r)
            acc["phi"] = a
        elif kind == "klein_gordon":
            c2 = p.c_mass * p.c_mass
            a = self._psi_rr(psi["v"]) - c2 * psi["v"]
            if self._source is not None:
                a = a + self.r * self._source(t, self.r)
            acc["v"] = a
        elif kind == "coupled":
            c2 = p.c_mass * p.c_mass
            u_val = self._axis_ratio(psi["u"])
            v_val = self._axis_ratio(psi["v"])
            v_vel = self._axis_ratio(pi["v"])
            psi_v_r = np.gradient(psi["v"], self.h, edge_order=2)
            v_grad = np.empty_like(v_val)
            v_grad[1:] = (psi_v_r[1:] - v_val[1:]) / self.r[1:]
            v_grad[0] = 0.0  # v is even in r
            lap_psi_v = self._psi_rr(psi["v"])
            acc["u"] = self._psi_rr(psi["u"]) + self.r * (
                p.P00 * v_vel * v_vel
                + p.Piso * v_grad * v_grad
                + p.R_coupling * v_val * v_val
            )
            if self._lag is None:
                # first evaluation: solve the quasilinear algebra exactly
                denom = 1.0 - u_val * p.H00
                if np.any(np.abs(denom) < 0.5):
                    raise NumericalAbort(
                        "quasilinear factor 1 - u*H00 left the hyperbolic "
                        "regime on the initial slice"
                    )
                acc["v"] = (
                    lap_psi_v - c2 * psi["v"] + u_val * p.Hiso * lap_psi_v
                ) / denom
            else:
                acc["v"] = (
                    lap_psi_v
                    - c2 * psi["v"]
                    + u_val * (p.H00 * self._lag + p.Hiso * lap_psi_v)
                )
            self._lag = acc["v"]
        else:
            raise ValueError(f"unknown model kind {self.model.kind!r}")
        for f in acc:
            acc[f][0] = 0.0
        return acc

    # --- stepping -----------------------------------------------------------

    def _push(self):
        data = {}
        for f in self.fields:
            data[f] = (self._axis_ratio(self.psi[f]), self._axis_ratio(self.pi[f]))
        self.band.push_slice(self.t, data)

    def advance(self):
        """One velocity-Verlet step; pushes the new slice into the band."""
        if self.step_index >= self.steps_total:
            raise RuntimeError("run already reached t_end")
        dt = self.dt
        a0 = self._accel_prev
        pi_half = {f: self.pi[f] + 0.5 * dt * a0[f] for f in self.fields}
        psi_new = {f: self.psi[f] + dt * pi_half[f] for f in self.fields}
        pi_pred = {f: pi_half[f] + 0.5 * dt * a0[f] for f in self.fields}
        t_new = self.grid.t0 + (self.step_index + 1) * dt
        a1 = self._accel(t_new, psi_new, pi_pred)
        self.psi = psi_new
        self.pi = {f: pi_half[f] + 0.5 * dt * a1[f] for f in self.fields}
        self._accel_prev = a1
        self.t = t_new
        self.step_index += 1
        for f in self.fields:
            if not np.all(np.isfinite(self.psi[f])):
                bad = int(np.argmin(np.isfinite(self.psi[f])))
                raise NumericalAbort(
                    f"non-finite value in field {f!r} at step {self.step_index}, "
                    f"t = {self.t:.6g}, node {bad} (r = {bad * self.h:.6g})"
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
        """Step to t_end; on_slice(band, t) fires after each push."""
        for t in self:
            if on_slice is not None:
                on_slice(self.band, t)
        return self.band


def evolve(model, grid, data):
    """Start an evolution; returns the streaming run handle.

    In radial mode the handle is a RadialRun; iterate it (or call
    run_to_end) to advance.  The initial slice is already in run.band.
    """
    if grid.mode == "radial":
        return RadialRun(model, grid, data)
    from .cartesian3d import Cartesian3dRun

    return Cartesian3dRun(model, grid, data)
