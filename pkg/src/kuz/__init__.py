"""Finite element solver for the Kuznetsov equation of nonlinear acoustics."""

from .analysis import (
    ErrorRecorder,
    ManufacturedSolution,
    ResultRow,
    compare_states_nested,
    fitted_order,
    grad_error_lp,
    l2_error,
    manufactured_forcing,
    observed_order,
    plateau_fit,
    read_csv,
    write_csv,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    default_config,
    gaussian_pulse_data,
    run_experiment,
)
from .linalg import SolverError, solve_direct, solve_iterative
from .mesh import Mesh, build_rect_mesh, locate_points, mesh_size, refine_uniform
from .ops import TimeSeries, discrete_laplacian, dtau, l2_project, nodal_interpolate, ritz_project
from .space import (
    FeSpace,
    assemble_convection,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    build_space,
    evaluate_at_points,
    evaluate_field,
    quadrature,
    shape_functions,
)
from .stepper import (
    CflReport,
    DegeneracyError,
    InitialData,
    ModelParams,
    StepperState,
    cfl_check,
    initial_state,
    nondegeneracy_min,
    run,
    step,
)

__all__ = [name for name in dir() if not name.startswith("_")]
