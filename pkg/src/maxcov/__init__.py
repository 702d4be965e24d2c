"""Route planning for a range-limited UAV fleet that maximizes target coverage."""

from .model import (
    ProblemConfig,
    Route,
    RoutePlan,
    make_plan,
    plan_cost,
    route_length,
    target_coverage,
    validate_plan,
)
from .mmas import MmasParams, MmasResult, run_mmas
from .nn import initial_cost, nn_construct
from .tsplib import (
    DistanceMatrix,
    Instance,
    Metric,
    build_distance_matrix,
    bundled_instance,
    critical_distance,
    parse_tsplib,
    read_tsplib,
)

__version__ = "0.1.0"
