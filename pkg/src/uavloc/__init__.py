"""UAV placement over signalized networks by uncertainty minimization.

A library and CLI that quantifies how well a heterogeneous sensor mix
(hovering UAVs, connected vehicles, loop detectors) pins down network
traffic states, and optimizes a fixed UAV fleet's placement to minimize
the total remaining uncertainty.
"""

from .network import Intersection, Link, Movement, Network, Path, validate_network
from .objective import ObjectiveEvaluator, ObjectiveWeights, marginal_uncertainty
from .observability import DeploymentVector, movement_observability, partition_paths
from .path_uncertainty import path_uncertainty
from .scenario import FlowModel, MovementSignal, Scenario, SignalPlan, generate_scenario
from .solvers import (
    SolverConfig,
    SolveResult,
    compare_runs,
    solve_bruteforce,
    solve_ga,
    solve_greedy_fcm,
    solve_iqga,
    solve_qga,
)

__version__ = "0.1.0"
