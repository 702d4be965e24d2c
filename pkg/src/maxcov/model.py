"""Route plans, feasibility and the coverage objective shared by both solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .tsplib import DistanceMatrix, Instance

__all__ = [
    "RANGE_TOL",
    "ProblemConfig",
    "Route",
    "RoutePlan",
    "route_length",
    "plan_cost",
    "target_coverage",
    "make_plan",
    "validate_plan",
    "plan_to_text",
    "plan_from_text",
    "plan_sort_key",
]

# absolute slack on the flight-range comparison
RANGE_TOL = 1e-9


@dataclass(frozen=True)
class ProblemConfig:
    flight_range: float
    num_uavs: int

    def __post_init__(self):
        if not self.flight_range > 0:
            raise ValueError(f"flight_range must be positive, got {self.flight_range}")
        if int(self.num_uavs) != self.num_uavs or self.num_uavs < 1:
            raise ValueError(f"num_uavs must be a positive integer, got {self.num_uavs}")


@dataclass(frozen=True)
class Route:
    nodes: tuple[int, ...]
    length: float

    @property
    def targets(self) -> tuple[int, ...]:
        return self.nodes[1:-1]


@dataclass(frozen=True)
class RoutePlan:
    routes: tuple[Route, ...]
    total_targets: int
    visited: frozenset[int]
    cost: float
    total_distance: float

    @property
    def num_visited(self) -> int:
        return len(self.visited)

    @property
    def coverage(self) -> float:
        return target_coverage(len(self.visited), self.total_targets)


def route_length(nodes: Sequence[int], dm: DistanceMatrix) -> float:
    """Sum of edge lengths along ``nodes``, accumulated left to right."""
    if len(nodes) == 0:
        raise ValueError("route must contain at least one node")
    n = dm.n
    for v in nodes:
        if not 0 <= v < n:
            raise IndexError(f"node index {v} out of range for n={n}")
    total = 0.0
    d = dm.d
    for a, b in zip(nodes[:-1], nodes[1:]):
        total += float(d[a, b])
    return total


def plan_cost(visited_count: int, total_targets: int) -> float:
    if total_targets < 1:
        raise ValueError("total_targets must be at least 1")
    if not 0 <= visited_count <= total_targets:
        raise ValueError(f"visited_count {visited_count} outside [0, {total_targets}]")
    return 1.0 - visited_count / total_targets


def target_coverage(visited_count: int, total_targets: int) -> float:
    """Percentage of targets visited."""
    if total_targets < 1:
        raise ValueError("total_targets must be at least 1")
    if not 0 <= visited_count <= total_targets:
        raise ValueError(f"visited_count {visited_count} outside [0, {total_targets}]")
    return 100.0 * visited_count / total_targets


def make_plan(routes: Iterable[Sequence[int]], dm: DistanceMatrix, total_targets: int) -> RoutePlan:
    """Assemble a :class:`RoutePlan` from raw node lists, deriving lengths, cost and coverage.

    No feasibility check happens here; use :func:`validate_plan` for that.
    """
    built = []
    visited: set[int] = set()
    for nodes in routes:
        nodes = tuple(int(v) for v in nodes)
        built.append(Route(nodes, route_length(nodes, dm)))
        visited.update(v for v in nodes[1:-1] if v != nodes[0])
    visited_count = min(len(visited), total_targets)
    return RoutePlan(
        routes=tuple(built),
        total_targets=total_targets,
        visited=frozenset(visited),
        cost=plan_cost(visited_count, total_targets),
        total_distance=sum(r.length for r in built),
    )


def plan_sort_key(plan: RoutePlan) -> tuple[float, float]:
    """Lower cost first, then shorter total distance."""
    return (plan.cost, plan.total_distance)


def validate_plan(plan: RoutePlan, inst: Instance, cfg: ProblemConfig) -> list[str]:
    """Return a list of human-readable violations; empty means the plan is feasible."""
    problems: list[str] = []
    base = inst.base_index
    n = inst.n
    dm = inst.distances

    if len(plan.routes) > cfg.num_uavs:
        problems.append(f"too many routes: {len(plan.routes)} > {cfg.num_uavs} UAVs")
    if plan.total_targets != inst.num_targets:
        problems.append(f"total_targets {plan.total_targets} != {inst.num_targets}")

    owner: dict[int, int] = {}
    union: set[int] = set()
    lengths = []
    for k, route in enumerate(plan.routes):
        nodes = route.nodes
        if len(nodes) < 2:
            problems.append(f"route {k}: fewer than 2 nodes")
            continue
        if any(not 0 <= v < n for v in nodes):
            problems.append(f"route {k}: node index out of range")
            continue
        if nodes[0] != base or nodes[-1] != base:
            problems.append(f"route {k}: does not start and end at base {base}")
        interior = nodes[1:-1]
        if base in interior:
            problems.append(f"route {k}: passes through base mid-route")
        seen: set[int] = set()
        for v in interior:
            if v == base:
                continue
            if v in seen:
                problems.append(f"route {k}: duplicate target {v} within route")
            seen.add(v)
            if v in owner and owner[v] != k:
                problems.append(f"duplicate target {v} in routes {owner[v]} and {k}")
            owner.setdefault(v, k)
        union |= seen
        length = route_length(nodes, dm)
        lengths.append(length)
        if abs(length - route.length) > 1e-9 * max(1.0, length):
            problems.append(f"route {k}: stored length {route.length} != actual {length}")
        if length > cfg.flight_range + RANGE_TOL:
            problems.append(f"route {k}: range exceeded ({length} > {cfg.flight_range})")

    if set(plan.visited) != union:
        problems.append("visited set does not match route interiors")
    if plan.total_targets >= 1 and len(union) <= plan.total_targets:
        expected = plan_cost(len(union), plan.total_targets)
        if abs(plan.cost - expected) > 1e-12:
            problems.append(f"cost {plan.cost} != 1 - visited/total = {expected}")
    total = sum(lengths)
    if abs(total - plan.total_distance) > 1e-9 * max(1.0, total):
        problems.append(f"total_distance {plan.total_distance} != sum of route lengths {total}")
    return problems


def plan_to_text(plan: RoutePlan) -> str:
    """Canonical text form: one header line, then one line of node indices per route."""
    head = (
        f"# cost={plan.cost!r} coverage={plan.coverage!r} "
        f"total_distance={plan.total_distance!r} visited={plan.num_visited} "
        f"targets={plan.total_targets} routes={len(plan.routes)}"
    )
    body = [" ".join(str(v) for v in r.nodes) for r in plan.routes]
    return "\n".join([head, *body]) + "\n"


def plan_from_text(text: str, dm: DistanceMatrix) -> RoutePlan:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("plan text must start with a '#' header line")
    fields = dict(tok.split("=", 1) for tok in lines[0][1:].split())
    total = int(fields["targets"])
    routes = [[int(v) for v in ln.split()] for ln in lines[1:]]
    return make_plan(routes, dm, total)
