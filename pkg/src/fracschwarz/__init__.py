"""Solver library for symmetric space-fractional diffusion on the square:
piecewise-linear finite elements, fast block-Toeplitz operator application,
and a two-level overlapping additive Schwarz preconditioner for CG.
"""

from .assembly import (DirectionalMeasure, StiffnessEntryTable,
                       assemble_directional_stiffness, assemble_mass,
                       build_operator, directional_entry, discretize_measure)
from .bench import (ExperimentSpec, ResultRow, load_vector, manufactured_f_example1,
                    manufactured_u, run_experiment, run_table)
from .errors import ConfigError, MaxIterationsError, NumericalError
from .fraccalc import (PiecewiseLinearTrace, SlopeJumpForm, frac_deriv_polynomial,
                       rl_left_deriv, rl_power_rule, rl_right_deriv, to_slope_jumps)
from .krylov import PcgReport, SolveConfig, cg_unpreconditioned, estimate_condition, pcg
from .mesh import (TwoLevelDecomposition, UniformMesh, build_decomposition,
                   build_mesh, coarse_prolongation)
from .operators import (CoarseOperator, FractionalOperator, build_coarse,
                        extract_local, load_symbol_cache, save_symbol_cache)
from .schwarz import SchwarzPreconditioner, build_preconditioner

__version__ = "0.1.0"

__all__ = [
    "DirectionalMeasure", "StiffnessEntryTable", "assemble_directional_stiffness",
    "assemble_mass", "build_operator", "directional_entry", "discretize_measure",
    "ExperimentSpec", "ResultRow", "load_vector", "manufactured_f_example1",
    "manufactured_u", "run_experiment", "run_table",
    "ConfigError", "MaxIterationsError", "NumericalError",
    "PiecewiseLinearTrace", "SlopeJumpForm", "frac_deriv_polynomial",
    "rl_left_deriv", "rl_power_rule", "rl_right_deriv", "to_slope_jumps",
    "PcgReport", "SolveConfig", "cg_unpreconditioned", "estimate_condition", "pcg",
    "TwoLevelDecomposition", "UniformMesh", "build_decomposition", "build_mesh",
    "coarse_prolongation",
    "CoarseOperator", "FractionalOperator", "build_coarse", "extract_local",
    "load_symbol_cache", "save_symbol_cache",
    "SchwarzPreconditioner", "build_preconditioner",
    "__version__",
]
