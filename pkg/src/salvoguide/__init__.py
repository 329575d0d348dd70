"""Distributed two-point-boundary-value guidance for cooperative salvo engagements.

Multiple slow attackers are steered so that their ranges to one faster,
maneuvering target follow exponential optimal references. Those references
end on consensus terminals shared over a directed communication graph.
"""

from .errors import (BoundaryDataError, ConfigError, GeometryError,
                     GeometryInconsistencyError, ModeError, ReferenceRangeError,
                     SalvoError, SegmentFeasibilityError, TimeOrderError)
from .graph import (CommGraph, RelayObservation, consensus_terminal,
                    contains_spanning_tree, relay_over_graph, relay_target_info)
from .guidance import (BoundaryData, GuidanceCommand, GuidanceGains, anchor_segment,
                       compute_gains, guidance_known, guidance_observed,
                       piecewise_guidance, reference_trajectory)
from .kinematics import (AccelComponents, AttackerState, RelativeState, TargetState,
                         attacker_position_from_relative, relative_derivatives,
                         relative_from_absolute, scalar_command_from_components)
from .observer import ExoModel, exo_step_truth, observer_derivative
from .scenario import example1, example2, parse_scenario, preset
from .sim import (ScenarioConfig, SimTrace, SimultaneityReport, TargetManeuver,
                  detect_simultaneity, run_scenario)
from .verification import (LyapunovReport, OptimalityReport, check_stationarity,
                           evaluate_cost, lyapunov_monitor)

__version__ = "0.1.0"
