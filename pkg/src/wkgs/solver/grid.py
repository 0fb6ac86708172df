"""Grid description and validation."""

from dataclasses import dataclass, field


_CFL_LIMIT = {"radial": 0.9, "cartesian3d": 0.45}


@dataclass(frozen=True)
class GridSpec:
    """Discretization parameters shared by both evolution modes.

    extent is r_max in radial mode and the box half-width in 3d mode.
    band_depth is the number of retained constant-t slices; at least 4 so
    cubic time interpolation is always possible.  band_depth=0 means keep
    the full history (used by the balance checks, which integrate over
    wide s-layers on small grids).
    """

    mode: str = "radial"
    extent: float = 40.0
    n_cells: int = 400
    cfl: float = 0.5
    t0: float = 4.0
    t_end: float = 20.0
    band_depth: int = 8

    def __post_init__(self):
        if self.mode not in _CFL_LIMIT:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0 < self.cfl <= _CFL_LIMIT[self.mode]:
            raise ValueError(
                f"cfl {self.cfl} outside (0, {_CFL_LIMIT[self.mode]}] for {self.mode}"
            )
        if self.n_cells < 8:
            raise ValueError("n_cells < 8")
        if self.extent <= 0:
            raise ValueError("extent must be positive")
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed t0")
        if self.t0 <= 1:
            raise ValueError("t0 must exceed 1 (initial slice must meet the cone region)")
        if self.band_depth != 0 and self.band_depth < 4:
            raise ValueError("band_depth must be 0 (full) or >= 4 (cubic interpolation)")

    @property
    def h(self):
        # radial: node spacing on [0, extent]; 3d: cell width across the box
        if self.mode == "cartesian3d":
            return 2.0 * self.extent / self.n_cells
        return self.extent / self.n_cells

    @property
    def dt(self):
        return self.cfl * self.h

    def to_dict(self):
        return {
            "mode": self.mode,
            "extent": self.extent,
            "n_cells": self.n_cells,
            "cfl": self.cfl,
            "t0": self.t0,
            "t_end": self.t_end,
            "band_depth": self.band_depth,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)
