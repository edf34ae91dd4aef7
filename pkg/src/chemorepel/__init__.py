"""Simulation and verification suite for a repulsive chemotaxis system
with logarithmic sensitivity and its volume-filling regularization."""

__version__ = "0.1.0"

from .grid import (Field, Grid, StencilOperator, apply_laplacian, build_grid,
                   gradient_faces, lambda1, neumann_eigs)
from .norms import NormSpec, evaluate_norm, lp_norm, mean
from .dynamics import (Params,ProbeRecord, SchemeConfig, SimulationError,
                       State, Trajectory, params_for_initial, simulate, step)
from .energy import (EnergyReport, audit_energy_identity, boundary_term,
                     default_kappa0, dissipation, energy,
                     exp_weighted_dissipation, report)
from .linearized import (BlockOperator, LinState, decay_check, evolve_linear,
                         semigroup_constant, singular_convolution_check)
from .stationary import (StationaryProblem, multi_init_report,
                         solve_stationary, stationary_residual)
from .ineq import FieldEnsemble, LognormalSmooth, TrigSeries, run_suite
from .rates import RateReport, fit_rate, rate_suite
from .checkpoint import Checkpoint, read_checkpoint, write_checkpoint
from .config import ConfigError, RunConfig, load_config
