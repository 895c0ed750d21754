"""pe3d: three-dimensional wide-angle parabolic-equation solver for
underwater acoustic propagation, with a two-level parallel execution model
and a scaling benchmark harness."""

__version__ = "0.1.0"

from .config import Config, RunOptions, load_config
from .environment import (
    Absorber,
    Environment,
    FieldSlab,
    Grid3D,
    SoundSpeedProfile,
    SourceSpec,
    gaussian_starter,
    hankel_factor,
    refraction_index,
    transmission_loss,
    wavenumber,
)
from .marching import FrequencyResult, MarchState, apply_boundary, range_step, run_frequency
from .operators import (
    StepCoefficients,
    apply_X,
    apply_Y,
    assemble_azimuth_system,
    assemble_depth_system,
    compute_rhs,
)
from .parallel import (
    ExecutorSpec,
    FarmReport,
    TimingRecord,
    frequency_farm,
    parallel_map_columns,
    scaling_harness,
    static_assignment,
)
from .tridiag import (
    SolveBatch,
    TriDiagSystem,
    dense_oracle_solve,
    solve_batch,
    solve_cyclic,
    solve_thomas,
)

__all__ = [
    "__version__",
    "Config",
    "RunOptions",
    "load_config",
    "Absorber",
    "Environment",
    "FieldSlab",
    "Grid3D",
    "SoundSpeedProfile",
    "SourceSpec",
    "gaussian_starter",
    "hankel_factor",
    "refraction_index",
    "transmission_loss",
    "wavenumber",
    "FrequencyResult",
    "MarchState",
    "apply_boundary",
    "range_step",
    "run_frequency",
    "StepCoefficients",
    "apply_X",
    "apply_Y",
    "assemble_azimuth_system",
    "assemble_depth_system",
    "compute_rhs",
    "ExecutorSpec",
    "FarmReport",
    "TimingRecord",
    "frequency_farm",
    "parallel_map_columns",
    "scaling_harness",
    "static_assignment",
    "SolveBatch",
    "TriDiagSystem",
    "dense_oracle_solve",
    "solve_batch",
    "solve_cyclic",
    "solve_thomas",
]
