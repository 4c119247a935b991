"""Periodic-box incompressible Euler solver with regularity diagnostics.

The package tracks, along each simulated trajectory, the quantities that
control smoothness: vorticity supremum and its time integral, a sampled
Holder seminorm of the vorticity, the derived length scale and the time
integral of its -5/2 power, Sobolev/shell norms of the velocity, and the
sup norms of the velocity-gradient tensor split into its symmetric and
antisymmetric parts.  Growth inequalities relating these are fitted from
the data and reported; a separate post-processing step runs the iterated
step construction that underlies blowup-rate estimates.
"""

from .config import ConfigError, RunConfig, load_config, parse_config
from .errors import BlowupDetected, CorruptSnapshotError, UsageError
from .gradients import (
    GradientTensorField,
    du_by_differentiation,
    du_from_vorticity,
    split_symmetric,
    tensor_linf,
    verify_antisymmetric_identity,
)
from .ic import abc_flow, make_initial, random_band_limited, taylor_green
from .io import read_snapshot, read_trace_csv, write_snapshot, write_trace_csv
from .monitor import (
    BlowupEstimate,
    BoundLedger,
    BoundRecord,
    RegularitySample,
    RegularityTrace,
    SampleEvaluator,
    accumulate,
    blowup_machinery,
    build_ledger,
    check_besov_diff_inequality,
    check_constantin,
    check_double_exp,
    check_du_length_scale,
    check_gronwall_hs,
    check_single_exp,
    check_vorticity_l2,
    delta_scaling,
)
from .norms import (
    HolderConfig,
    besov_norm,
    holder_seminorm,
    length_scale,
    length_scale_from_seminorm,
    linf_norm,
    sobolev_norm,
)
from .solver import SolverConfig, TrajectoryState, cfl_dt, euler_rhs, run, step_rk4
from .spectral import Grid3, SpectralField3, curl, l2_norm, leray_project

__version__ = "0.1.0"

__all__ = [
    "BlowupDetected",
    "BlowupEstimate",
    "BoundLedger",
    "BoundRecord",
    "ConfigError",
    "CorruptSnapshotError",
    "GradientTensorField",
    "Grid3",
    "HolderConfig",
    "RegularitySample",
    "RegularityTrace",
    "RunConfig",
    "SampleEvaluator",
    "SolverConfig",
    "SpectralField3",
    "TrajectoryState",
    "UsageError",
    "abc_flow",
    "accumulate",
    "besov_norm",
    "blowup_machinery",
    "build_ledger",
    "cfl_dt",
    "check_besov_diff_inequality",
    "check_constantin",
    "check_double_exp",
    "check_du_length_scale",
    "check_gronwall_hs",
    "check_single_exp",
    "check_vorticity_l2",
    "curl",
    "delta_scaling",
    "du_by_differentiation",
    "du_from_vorticity",
    "euler_rhs",
    "holder_seminorm",
    "l2_norm",
    "length_scale",
    "length_scale_from_seminorm",
    "leray_project",
    "linf_norm",
    "load_config",
    "make_initial",
    "parse_config",
    "random_band_limited",
    "read_snapshot",
    "read_trace_csv",
    "run",
    "sobolev_norm",
    "split_symmetric",
    "step_rk4",
    "taylor_green",
    "tensor_linf",
    "verify_antisymmetric_identity",
    "write_snapshot",
    "write_trace_csv",
]
