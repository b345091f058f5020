"""Traveling waves of doubly nonlinear diffusion: solvers, transforms and norms."""
from .direct import (CFLError, DirectSolverConfig, DomainError, SolveResult, SolverError,
                     pressure_of, residual_density, solve_density, step_density,
                     support_boundary, to_wave_frame)
from .geometry import (Cylinder, Lattice, NormReport, cc_ball, cc_distance, hodograph, hodograph_inverse,
                       lipschitz_seminorm, quasi_isometry_ratio, x_norm, y_norm)
from .grid import FieldSequence, HalfSpaceGrid, ScalarField, read_field_csv, write_field_csv
from .model import (DegenerateJetError, Jet, ModelParams, ParameterError, apply_L_sigma_jet,
                    new_params, nonlinearity_N, rest_q, stationary_pressure,
                    traveling_wave_density)
from .perturbation import (PerturbationConfig, TransformMeta, apply_L_sigma, check_commutation,
                           residual_transformed, solve_perturbation, step_perturbation, zeta_of)

__version__ = "0.1.0"
