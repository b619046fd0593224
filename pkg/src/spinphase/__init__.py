"""Spin-1/2 evolution in a slowly varying magnetic field.

Closed-form second-order adiabatic solutions for spinor and classical spin,
the associated phase corrections (dynamical, first- and second-order
geometric, and the exact non-adiabatic geometric phase), and a verification
harness that checks everything against exact integration and analytic
oracles.
"""

from .adiabatic_engine import (
    AdiabaticParams,
    QuasiStationary,
    SolutionConstants,
    TransformChain,
    adiabatic_params,
    classical_solution,
    constants_map,
    quasi_stationary,
    r_chain,
    spinor_solution,
    tracked_eigenvector,
    transform_chain,
    u_chain,
)
from .errors import (
    ArcTooLong,
    BranchJump,
    ConfigError,
    DegenerateField,
    DomainError,
    GridTooCoarse,
    IoError,
    LoopNotClosed,
    NormalizationError,
    OverlapLoss,
    PerturbativeRegimeViolation,
    PoleSingularity,
    SelfIntersection,
    SpinPhaseError,
    StepSizeUnderflow,
    UsageError,
)
from .exact_dynamics import (
    IntegratorConfig,
    Trajectory,
    bloch_series,
    bloch_to_spinor,
    default_grid,
    exponential_midpoint_bloch,
    exponential_midpoint_schrodinger,
    extract_total_phase,
    integrate_bloch,
    integrate_schrodinger,
    residual_defect,
    schrodinger_phase,
    spinor_to_bloch,
    trajectory_to_csv,
)
from .field_profiles import (
    FieldProfile,
    FieldSample,
    cone_3d,
    constant,
    derivative_selftest,
    is_in_plane,
    polynomial_angle,
    profile_from_dict,
    profile_from_json,
    profile_to_dict,
    sample,
    sinusoidal_angle,
    uniform_rotation,
    user_tabulated,
)
from .geometric_phases import (
    MLoop,
    PhaseDecomposition,
    Phi2Terms,
    aa_geometric_phase_coordinate,
    aa_geometric_phase_solid_angle,
    berry_phi1,
    generalized_field,
    generalized_line_integral,
    loop_from_profile,
    phase_decomposition,
    phi0,
    phi2,
    phi2_byparts_direct,
    phi2_decomposition,
    phi_dyn_expect,
    stokes_surface_integral,
)
from .verification import (
    ConvergenceReport,
    PhaseBudget,
    StokesRow,
    TimescaleDemo,
    check_horizon,
    run_convergence,
    run_phase_budget,
    run_stokes_check,
    run_timescale_demo,
    sinusoidal_family,
    stokes_csv,
)

__version__ = "0.1.0"
