"""stlab: a grid laboratory for Dirichlet problems with measure data and
singular nonnegative absorption.

The pieces: grid domains with exact boundary geometry (interval, disk,
square), finite measures (atoms plus densities) deposited onto the grid,
absorption potentials with truncation schedules, symmetric positive-definite
solves, inward-normal boundary traces, duality kernels from adjoint solves,
and theorem-level verification suites, all driven by a config-file CLI.
"""

from .domain import (
    Domain,
    DomainError,
    build_disk,
    build_domain,
    build_interval,
    build_rectangle,
    distance_to_boundary,
    inward_normal,
)
from .fields import BoundaryTrace, Field
from .measure import (
    Density,
    Measure,
    MeasureError,
    callable_density,
    density_measure,
    deposit,
    dirac,
    load_vector,
    mollify,
    power_distance_density,
    split_signed,
    table_density,
    total_variation,
    uniform_density,
)
from .potential import (
    Potential,
    PotentialError,
    TruncationSchedule,
    WeightedL1Result,
    callable_potential,
    constant_potential,
    interior_singularity_potential,
    power_distance_potential,
    sample,
    table_potential,
    truncate,
    weighted_l1,
    zero_potential,
)
from .operator import (
    DiscreteOperator,
    ScheduleSolver,
    SolverError,
    TruncationDiagnostics,
    assemble,
    assemble_from_values,
    energy,
    solve_dirichlet,
    solve_truncated_limit,
)
from .trace import (
    green_identity_residual,
    normal_derivative,
    trace_l1_norm,
    trace_matrix,
)
from .kernel import (
    KernelSet,
    duality_kernel,
    harmonic_kernel,
    kernel_set,
    positivity_set,
    subsolution_defect,
    truncation_kernels,
)
from .verify import (
    CheckCase,
    VerifyReport,
    comparison_check,
    energy_check,
    hopf_certificate,
    hopf_check,
    inequality_suite,
    representation_check,
)
from .config import ConfigError, RunConfig, load_config

__version__ = "0.1.0"

__all__ = [
    "BoundaryTrace",
    "CheckCase",
    "ConfigError",
    "Density",
    "DiscreteOperator",
    "Domain",
    "DomainError",
    "Field",
    "KernelSet",
    "Measure",
    "MeasureError",
    "Potential",
    "PotentialError",
    "RunConfig",
    "ScheduleSolver",
    "SolverError",
    "TruncationDiagnostics",
    "TruncationSchedule",
    "VerifyReport",
    "WeightedL1Result",
    "assemble",
    "assemble_from_values",
    "build_disk",
    "build_domain",
    "build_interval",
    "build_rectangle",
    "callable_density",
    "callable_potential",
    "comparison_check",
    "constant_potential",
    "density_measure",
    "deposit",
    "dirac",
    "distance_to_boundary",
    "duality_kernel",
    "energy",
    "energy_check",
    "green_identity_residual",
    "harmonic_kernel",
    "hopf_certificate",
    "hopf_check",
    "inequality_suite",
    "interior_singularity_potential",
    "inward_normal",
    "kernel_set",
    "load_config",
    "load_vector",
    "mollify",
    "normal_derivative",
    "positivity_set",
    "power_distance_density",
    "power_distance_potential",
    "representation_check",
    "sample",
    "solve_dirichlet",
    "solve_truncated_limit",
    "split_signed",
    "subsolution_defect",
    "table_density",
    "table_potential",
    "total_variation",
    "trace_l1_norm",
    "trace_matrix",
    "truncate",
    "truncation_kernels",
    "uniform_density",
    "weighted_l1",
    "zero_potential",
]
