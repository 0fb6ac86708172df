"""Model descriptors: which fields evolve and with what right-hand side.

Sign conventions (fixed by the oracle fixtures and used verbatim by the
steppers, with lap the spatial Laplacian):

    wave:          phi_tt = lap phi + forcing
    Klein-Gordon:  v_tt   = lap v - c^2 v + forcing
    coupled:       u_tt   = lap u + P00 (v_t)^2 + Piso |grad v|^2 + R v^2
                   v_tt   = lap v - c^2 v + u (H00 v_tt + Hiso lap v)

The coupled v-equation is quasilinear in v_tt; the stepper treats the
H-term explicitly (v_tt lagged one step), acceptable because |u| = O(eps).
A source is either None, the name of a manufactured case (reconstructible
from snapshots), or a bare callable f(t, r) -> value (not snapshotable).
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Coupling constants of the wave--Klein-Gordon system.

    P00/Piso and H00/Hiso are the radial-mode restrictions of the constant
    symmetric tensors (time-time and isotropic space-space entries).  In 3d
    mode, p_full/h_full may carry full symmetric 4x4 matrices instead; when
    given they take precedence over the isotropic pairs.
    """

    P00: float = 1.0
    Piso: float = 1.0
    R_coupling: float = 1.0
    H00: float = 1.0
    Hiso: float = 1.0
    c_mass: float = 1.0
    eps_amp: float = 1e-3
    p_full: tuple = None
    h_full: tuple = None

    def __post_init__(self):
        if not self.c_mass > 0:
            raise ValueError("c_mass must be positive")
        for name in ("p_full", "h_full"):
            m = getattr(self, name)
            if m is None:
                continue
            arr = np.asarray(m, dtype=float)
            if arr.shape != (4, 4):
                raise ValueError(f"{name} must be a 4x4 matrix")
            if not np.allclose(arr, arr.T, atol=0.0):
                raise ValueError(f"{name} must be symmetric")
            # store hashable/serializable form
            object.__setattr__(self, name, tuple(map(tuple, arr.tolist())))

    def to_dict(self):
        d = {
            "P00": self.P00,
            "Piso": self.Piso,
            "R_coupling": self.R_coupling,
            "H00": self.H00,
            "Hiso": self.Hiso,
            "c_mass": self.c_mass,
            "eps_amp": self.eps_amp,
        }
        if self.p_full is not None:
            d["p_full"] = [list(row) for row in self.p_full]
        if self.h_full is not None:
            d["h_full"] = [list(row) for row in self.h_full]
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class ModelSpec:
    kind: str                    # linear_wave | klein_gordon | coupled
    fields: tuple                # evolved field names
    source: object = None        # None | manufactured-case name | callable
    params: ModelParams = None

    @property
    def c_mass(self):
        return self.params.c_mass if self.params is not None else 1.0

    def source_fn(self):
        """Resolve the source to a callable f(t, r) or None."""
        if self.source is None:
            return None
        if callable(self.source):
            return self.source
        from .manufactured import manufactured_case

        return manufactured_case(str(self.source)).forcing

    def to_dict(self):
        if callable(self.source):
            src = "<callable>"
        else:
            src = self.source
        d = {"kind": self.kind, "fields": list(self.fields), "source": src}
        if self.params is not None:
            d["params"] = self.params.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        params = ModelParams.from_dict(d["params"]) if d.get("params") else None
        src = d.get("source")
        if src == "<callable>":
            # the original run used an ad-hoc callable; the snapshot cannot
            # reconstruct it, so the reloaded band has no source available
            src = None
        return cls(kind=d["kind"], fields=tuple(d["fields"]), source=src, params=params)


def linear_wave(source=None):
    """Single wave equation, optional forcing."""
    return ModelSpec(kind="linear_wave", fields=("phi",), source=source)


def klein_gordon(source=None, c_mass=1.0):
    """Single Klein-Gordon equation with explicit mass c."""
    return ModelSpec(
        kind="klein_gordon",
        fields=("v",),
        source=source,
        params=ModelParams(c_mass=c_mass),
    )


def coupled(params=None):
    """The full wave--Klein-Gordon coupling."""
    return ModelSpec(kind="coupled", fields=("u", "v"), params=params or ModelParams())
