"""Time evolution: radial 1+1 reduction and coarse 3+1 Cartesian mode.

Evolved fields live on flat constant-t slices; a sliding FieldBand retains
enough slices to reconstruct values (and low-order derivatives) anywhere a
hyperboloid of the covered time range cuts through.
"""

from .grid import GridSpec
from .models import ModelParams, linear_wave, klein_gordon, coupled
from .manufactured import manufactured_case
from .band import (
    FieldBand,
    commuted_field,
    write_snapshot,
    read_snapshot,
    SnapshotFormatError,
    BandCoverageError,
)
from .radial import (
    evolve,
    RadialRun,
    InitialData,
    case_data,
    zero_data,
    radial_bump,
    SupportEscapeError,
    NumericalAbort,
)
from .cartesian3d import Cartesian3dRun

__all__ = [
    "GridSpec",
    "ModelParams",
    "linear_wave",
    "klein_gordon",
    "coupled",
    "manufactured_case",
    "FieldBand",
    "commuted_field",
    "write_snapshot",
    "read_snapshot",
    "SnapshotFormatError",
    "BandCoverageError",
    "evolve",
    "RadialRun",
    "InitialData",
    "case_data",
    "zero_data",
    "radial_bump",
    "Cartesian3dRun",
    "SupportEscapeError",
    "NumericalAbort",
]
