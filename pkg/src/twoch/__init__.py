"""Conservative solutions of the two-component Camassa-Holm system.

The package evolves the equivalent semilinear system along characteristics,
converts between Eulerian and Lagrangian descriptions (keeping the energy
that concentrates into atoms at wave breaking), and computes certified
two-sided estimates of the relabeling-invariant distance between solutions.
"""

from .dynamics import (
    Diagnostics,
    EvolveResult,
    IntegratorConfig,
    KernelValues,
    compute_kernels,
    evolve,
    rhs,
    semigroup_T,
)
from .errors import ConfigError, ConstraintViolation, NumericalFailure, TwochError
from .eulerian import (
    DReport,
    EnergyMeasure,
    EulerianState,
    check_in_D,
    cumulative,
    total_energy,
)
from .grid import (
    Grid,
    aligned_grid,
    cumulative_trapezoid,
    l2_norm,
    sup_norm,
    trapezoid_weights,
)
from .lagrangian import (
    ConstraintReport,
    LagrangianState,
    Relabeling,
    check_in_G,
    compose_relabelings,
    diff_norm_E,
    diff_norm_sup,
    ground_state,
    identity_relabeling,
    invert_monotone,
    invert_relabeling,
    norm_E,
    project_F0,
    relabel,
    relabeling_norm,
    shift_relabeling,
    smooth_relabeling,
)
from .metric import J_upper, MetricEstimate, dM_estimate, d_DM, r_separation
from .oracles import (
    bisection_L,
    brute_force_kernels,
    collision_state,
    peakon_antipeakon,
    peakon_lagrangian,
    random_admissible_state,
    single_peakon,
)
from .serialize import load_state, read_table, save_state, write_table
from .transforms import roundtrip_F0, to_eulerian, to_lagrangian

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConstraintReport",
    "ConstraintViolation",
    "Diagnostics",
    "DReport",
    "EnergyMeasure",
    "EulerianState",
    "EvolveResult",
    "Grid",
    "IntegratorConfig",
    "J_upper",
    "KernelValues",
    "LagrangianState",
    "MetricEstimate",
    "NumericalFailure",
    "Relabeling",
    "TwochError",
    "aligned_grid",
    "bisection_L",
    "brute_force_kernels",
    "check_in_D",
    "check_in_G",
    "collision_state",
    "compose_relabelings",
    "compute_kernels",
    "cumulative",
    "cumulative_trapezoid",
    "dM_estimate",
    "d_DM",
    "diff_norm_E",
    "diff_norm_sup",
    "evolve",
    "ground_state",
    "identity_relabeling",
    "invert_monotone",
    "invert_relabeling",
    "l2_norm",
    "load_state",
    "norm_E",
    "peakon_antipeakon",
    "peakon_lagrangian",
    "project_F0",
    "r_separation",
    "random_admissible_state",
    "read_table",
    "relabel",
    "relabeling_norm",
    "rhs",
    "roundtrip_F0",
    "save_state",
    "semigroup_T",
    "shift_relabeling",
    "single_peakon",
    "smooth_relabeling",
    "sup_norm",
    "to_eulerian",
    "to_lagrangian",
    "total_energy",
    "trapezoid_weights",
    "write_table",
]
