"""Greedy nearest-neighbour route construction (the baseline solver)."""

from __future__ import annotations

import enum

import numpy as np

from .model import RANGE_TOL, ProblemConfig, RoutePlan, make_plan
from .tsplib import DistanceMatrix, Instance

__all__ = ["TieRule", "nn_construct", "initial_cost"]


class TieRule(str, enum.Enum):
    LOWEST_INDEX = "lowest-index"


def nn_construct(
    inst: Instance,
    dm: DistanceMatrix | None = None,
    cfg: ProblemConfig | None = None,
    tie_rule: TieRule = TieRule.LOWEST_INDEX,
) -> RoutePlan:
    """Build one route per UAV, each time flying to the nearest unvisited target
    from which the base is still reachable.

    A UAV returns home as soon as no such target exists; the next UAV then
    starts from the base with a full range. Equidistant candidates resolve to
    the lowest node index.
    """
    if cfg is None:
        raise TypeError("nn_construct() requires a ProblemConfig")
    if TieRule(tie_rule) is not TieRule.LOWEST_INDEX:
        raise ValueError(f"unsupported tie rule {tie_rule!r}")
    dm = inst.distances if dm is None else dm
    d = dm.d
    base = inst.base_index
    fr = cfg.flight_range

    open_ = np.ones(inst.n, dtype=bool)
    open_[base] = False
    to_base = d[:, base]
    routes = []
    for _ in range(cfg.num_uavs):
        route = [base]
        cur = base
        used = 0.0
        while True:
            # same left-to-right summation as route_length, so a passing check
            # here is exactly the closed route's length
            fits = open_ & ((used + d[cur]) + to_base <= fr + RANGE_TOL)
            if not fits.any():
                break
            cand = np.flatnonzero(fits)
            nxt = int(cand[np.argmin(d[cur, cand])])  # argmin keeps the first, i.e. lowest index
            used += float(d[cur, nxt])
            route.append(nxt)
            open_[nxt] = False
            cur = nxt
        route.append(base)
        routes.append(route)
    return make_plan(routes, dm, inst.num_targets)


def initial_cost(inst: Instance, dm: DistanceMatrix | None = None, cfg: ProblemConfig | None = None) -> float:
    """Cost of the nearest-neighbour plan, used to seed the pheromone ceiling."""
    return nn_construct(inst, dm, cfg).cost
