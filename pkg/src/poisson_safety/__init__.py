"""Poisson safety functions over lifted occupancy grids, and the
predictive safety filters built on them."""

from .control import (ControlInput, FilterResult, InputBox, MpcParams,
                      MpcSolution, RobotState, allocate_heading, dcbf_filter,
                      solve_mpc)
from .errors import (ConfigError, DegenerateShape, InfeasibleProblem,
                     OutOfDomain)
from .fileio import (read_pgm_occupancy, read_psf1, write_pgm_occupancy,
                     write_psf1)
from .forecast import (LiftedBuildParams, LiftedBuildReport, ObstacleTrack,
                       build_lifted_field, estimate_velocities,
                       predict_occupancy)
from .geometry import (FootprintShape, Kernel, buffer_safe_set,
                       collision_check, rasterize_footprint)
from .grid import (GridSpec, LiftedSafetyField, OccupancyGrid, ScalarField,
                   wrap_angle, wrap_error)
from .poisson import SolveReport, SolverParams, residual, solve_poisson
from .qp import QpSolution, kkt_residual, solve_qp
from .sim import (ObstacleSpec, ScenarioConfig, SimSession, TrajectoryLog,
                  config_from_json, load_config, run_scenario)

__version__ = "0.1.0"
