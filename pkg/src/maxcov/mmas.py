"""Max-Min Ant System for maximum target coverage with a range-limited fleet.

Each ant builds a complete multi-UAV plan. From its current location it picks
the next target with probability proportional to ``tau * eta**beta`` over the
targets it has not visited and can still reach while keeping enough range to
fly home. When no target qualifies the UAV returns to base and the next UAV
starts with a full tank. After every ant, the pheromone matrix evaporates and
the ant's edges receive ``1 / cost``, with the whole matrix held inside
``[tau_min, tau_max]``.

Randomness: a single :class:`numpy.random.Generator` (PCG64 via
``numpy.random.default_rng(seed)``) per run; every roulette draw consumes one
``Generator.random()`` double, ants draw in construction order.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numba as nb
import numpy as np

from .model import RANGE_TOL, ProblemConfig, RoutePlan, make_plan, plan_sort_key
from .nn import nn_construct
from .tsplib import DistanceMatrix, Instance

__all__ = [
    "RETURN_TO_BASE",
    "UpdateRule",
    "TauMinSchedule",
    "MmasParams",
    "PheromoneState",
    "AntState",
    "IterationStats",
    "MmasResult",
    "cost_floor",
    "init_pheromone",
    "compute_tau_min",
    "heuristic_matrix",
    "heuristic_power",
    "selection_probabilities",
    "sample_next",
    "construct_plan",
    "evaporate",
    "deposit",
    "run_mmas",
    "stats_to_csv",
]

RETURN_TO_BASE = -1


class UpdateRule(str, enum.Enum):
    PER_ANT = "per-ant"
    ITERATION_BEST = "iteration-best"


class TauMinSchedule(str, enum.Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class MmasParams:
    beta: float = 7.0
    rho: float = 0.01
    num_ants: int = 151
    iterations: int = 1000
    seed: int = 0
    update_rule: UpdateRule = UpdateRule.PER_ANT
    tau_min_schedule: TauMinSchedule = TauMinSchedule.STATIC

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.num_ants < 1:
            raise ValueError("num_ants must be at least 1")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "update_rule", UpdateRule(self.update_rule))
        object.__setattr__(self, "tau_min_schedule", TauMinSchedule(self.tau_min_schedule))


@dataclass(frozen=True, eq=False)
class PheromoneState:
    tau: np.ndarray = field(repr=False)
    tau_max: float
    tau_min: float
    rho: float
    c_floor: float

    def copy(self) -> "PheromoneState":
        return replace(self, tau=self.tau.copy())


@dataclass
class AntState:
    """Mid-construction state of one ant.

    ``memory`` holds every target that is visited or known to be out of reach
    for the current UAV. ``travelled`` is the distance flown by the current UAV.
    """

    current: int
    flight_range: float
    travelled: float = 0.0
    uavs_used: int = 0
    memory: set[int] = field(default_factory=set)
    routes: list[list[int]] = field(default_factory=list)

    @property
    def remaining_range(self) -> float:
        return self.flight_range - self.travelled


@dataclass(frozen=True)
class IterationStats:
    iteration: int
    best_cost: float
    mean_cost: float
    best_coverage: float
    best_total_distance: float
    iter_best_cost: float
    iter_best_distance: float
    tau_low: float = math.nan
    tau_high: float = math.nan


@dataclass
class MmasResult:
    best: RoutePlan
    stats: list[IterationStats]
    nn_plan: RoutePlan
    c_init: float
    tau_max: float
    tau_min: float
    best_iteration: int
    elapsed: float


def cost_floor(total_targets: int) -> float:
    """Smallest cost used as a divisor: half of one target's share."""
    return 1.0 / (2 * total_targets)


def init_pheromone(rho: float, c_init: float, n: int, total_targets: int | None = None,
                   iterations: int | None = None) -> PheromoneState:
    """Fill an ``n x n`` matrix with ``tau_max = 1 / (rho * c_init)``.

    ``c_init`` is floored at :func:`cost_floor` so a perfect initial plan stays
    finite. ``tau_min`` follows :func:`compute_tau_min` when ``iterations`` is
    given, otherwise it starts equal to ``tau_max`` and must be set by the caller.
    """
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if not 0 <= c_init <= 1:
        raise ValueError(f"c_init must lie in [0, 1], got {c_init}")
    total_targets = n - 1 if total_targets is None else total_targets
    c_floor = cost_floor(total_targets)
    tau_max = 1.0 / (rho * max(c_init, c_floor))
    tau_min = tau_max if iterations is None else compute_tau_min(rho, iterations, tau_max)
    tau = np.full((n, n), tau_max)
    return PheromoneState(tau, tau_max, tau_min, rho, c_floor)


def compute_tau_min(rho: float, iterations: float, tau_max: float) -> float:
    return (1.0 - rho) ** (iterations / 10.0) * tau_max


def heuristic_matrix(dm: DistanceMatrix) -> np.ndarray:
    """``1 / d`` off the diagonal, 0 on it.

    Distinct nodes at distance 0 get ``2 / d_min``, twice the inverse of the
    smallest positive distance in the matrix (1.0 if there is none).
    """
    d = dm.d
    n = dm.n
    off = ~np.eye(n, dtype=bool)
    positive = d[off & (d > 0)]
    cap = 2.0 / positive.min() if positive.size else 1.0
    eta = np.zeros_like(d)
    with np.errstate(divide="ignore"):
        inv = 1.0 / d
    eta[off] = np.where(d[off] > 0, inv[off], cap)
    return eta


def heuristic_power(eta: np.ndarray, beta: float) -> np.ndarray:
    """``eta**beta`` with every row scaled so its largest entry is 1.

    Row scaling leaves the move probabilities from that row unchanged and keeps
    large ``beta`` from underflowing to zero.
    """
    off = ~np.eye(eta.shape[0], dtype=bool)
    row_max = np.where(off, eta, 0.0).max(axis=1, keepdims=True)
    row_max[row_max == 0] = 1.0
    with np.errstate(divide="ignore"):
        out = np.where(off, (eta / row_max) ** beta, 0.0)
    return out


# --- compiled kernels -------------------------------------------------------

# below this the scaled weights lose precision; recompute them in log space
_TINY_WEIGHT = 1e-200


@nb.njit(cache=True)
def _candidate_weights(cur, travelled, open_, tau, eta_beta, eta, beta, d, base, fr, out):
    """Fill ``out`` with unnormalized move weights; returns their sum.

    A target is a candidate when it is open and the UAV can fly there and back
    to base within ``fr``. A zero sum means no candidate exists.
    """
    total = 0.0
    top = 0.0
    found = False
    n = d.shape[0]
    for j in range(n):
        w = 0.0
        if j != cur and open_[j] and (travelled + d[cur, j]) + d[j, base] <= fr + RANGE_TOL:
            found = True
            w = tau[cur, j] * eta_beta[cur, j]
            if w > top:
                top = w
        else:
            out[j] = -1.0
            continue
        out[j] = w
        total += w
    if not found:
        for j in range(n):
            out[j] = 0.0
        return 0.0
    if top < _TINY_WEIGHT:
        # the row's nearest nodes are gone and the rest underflowed
        best = -np.inf
        for j in range(n):
            if out[j] >= 0.0:
                lw = math.log(tau[cur, j]) + beta * math.log(eta[cur, j])
                out[j] = lw
                if lw > best:
                    best = lw
            else:
                out[j] = np.nan
        total = 0.0
        for j in range(n):
            if math.isnan(out[j]):
                out[j] = 0.0
            else:
                out[j] = math.exp(out[j] - best)
                total += out[j]
        return total
    for j in range(n):
        if out[j] < 0.0:
            out[j] = 0.0
    return total


@nb.njit(cache=True)
def _roulette(weights, total, u):
    if total <= 0.0:
        return -1
    r = u * total
    acc = 0.0
    last = -1
    for j in range(weights.shape[0]):
        w = weights[j]
        if w > 0.0:
            acc += w
            last = j
            if r < acc:
                return j
    return last


@nb.njit(cache=True)
def _construct(d, tau, eta_beta, eta, beta, base, fr, num_uavs, rng, seq):
    """One ant's plan written into ``seq`` as base-delimited segments.

    Returns ``(length_of_seq, visited_count, total_distance)``.
    """
    n = d.shape[0]
    open_ = np.ones(n, dtype=np.bool_)
    open_[base] = False
    weights = np.empty(n)
    pos = 0
    seq[pos] = base
    pos += 1
    visited = 0
    total = 0.0
    for _ in range(num_uavs):
        cur = base
        travelled = 0.0
        while True:
            s = _candidate_weights(cur, travelled, open_, tau, eta_beta, eta, beta, d, base, fr, weights)
            nxt = _roulette(weights, s, rng.random()) if s > 0.0 else -1
            if nxt < 0:
                break
            travelled += d[cur, nxt]
            open_[nxt] = False
            seq[pos] = nxt
            pos += 1
            visited += 1
            cur = nxt
        travelled += d[cur, base]
        total += travelled
        seq[pos] = base
        pos += 1
    return pos, visited, total


@nb.njit(cache=True)
def _evaporate(tau, rho, tau_min):
    keep = 1.0 - rho
    n = tau.shape[0]
    for i in range(n):
        for j in range(n):
            v = keep * tau[i, j]
            tau[i, j] = v if v > tau_min else tau_min


@nb.njit(cache=True)
def _deposit(tau, seq, seq_len, amount, tau_max):
    # an out-and-back route uses its single edge twice; credit it once
    for k in range(seq_len - 1):
        a = seq[k]
        b = seq[k + 1]
        if a == b:
            continue
        if k >= 1 and seq[k - 1] == b:
            continue
        v = tau[a, b] + amount
        if v > tau_max:
            v = tau_max
        tau[a, b] = v
        tau[b, a] = v


@nb.njit(cache=True)
def _bounds_ok(tau, tau_min, tau_max):
    lo = np.inf
    hi = -np.inf
    n = tau.shape[0]
    for i in range(n):
        for j in range(n):
            v = tau[i, j]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
    return lo, hi, lo >= tau_min and hi <= tau_max


@nb.njit(cache=True)
def _run_iteration(d, tau, eta_beta, eta, beta, base, fr, num_uavs, num_ants, rng, rho, tau_min, tau_max,
                   c_floor, total_targets, per_ant, check, costs, dists, seq, best_seq):
    """Run every ant once. Returns ``(best_ant, best_len, violations, lo, hi)``."""
    best_ant = -1
    best_len = 0
    best_cost = np.inf
    best_dist = np.inf
    violations = 0
    lo = np.inf
    hi = -np.inf
    for a in range(num_ants):
        seq_len, visited, total = _construct(d, tau, eta_beta, eta, beta, base, fr, num_uavs, rng, seq)
        cost = 1.0 - visited / total_targets
        costs[a] = cost
        dists[a] = total
        if cost < best_cost or (cost == best_cost and total < best_dist):
            best_ant = a
            best_cost = cost
            best_dist = total
            best_len = seq_len
            best_seq[:seq_len] = seq[:seq_len]
        if per_ant:
            _evaporate(tau, rho, tau_min)
            _deposit(tau, seq, seq_len, 1.0 / max(cost, c_floor), tau_max)
            if check:
                l, h, ok = _bounds_ok(tau, tau_min, tau_max)
                lo = min(lo, l)
                hi = max(hi, h)
                if not ok:
                    violations += 1
    if not per_ant:
        _evaporate(tau, rho, tau_min)
        _deposit(tau, best_seq, best_len, 1.0 / max(best_cost, c_floor), tau_max)
        if check:
            l, h, ok = _bounds_ok(tau, tau_min, tau_max)
            lo = min(lo, l)
            hi = max(hi, h)
            if not ok:
                violations += 1
    return best_ant, best_len, violations, lo, hi


# --- public operations ------------------------------------------------------

def _open_mask(ant: AntState, n: int, base: int) -> np.ndarray:
    open_ = np.ones(n, dtype=bool)
    open_[base] = False
    if ant.memory:
        open_[list(ant.memory)] = False
    return open_


def selection_probabilities(ant: AntState, tau: np.ndarray, eta: np.ndarray, beta: float,
                            dm: DistanceMatrix, base: int, fr: float | None = None) -> np.ndarray:
    """Move probabilities from ``ant.current`` over all nodes (zeros outside the candidate set)."""
    fr = ant.flight_range if fr is None else fr
    if isinstance(tau, PheromoneState):
        tau = tau.tau
    d = dm.d
    n = dm.n
    out = np.empty(n)
    eta = np.asarray(eta, dtype=np.float64)
    s = _candidate_weights(ant.current, float(ant.travelled), _open_mask(ant, n, base),
                           np.asarray(tau, dtype=np.float64), heuristic_power(eta, beta), eta,
                           float(beta), d, base, float(fr), out)
    if s > 0.0:
        out /= s
    return out


def sample_next(probs: Sequence[float], rng: np.random.Generator) -> int:
    """Roulette-wheel draw; :data:`RETURN_TO_BASE` when every entry is zero."""
    p = np.ascontiguousarray(probs, dtype=np.float64)
    total = float(p.sum())
    if total <= 0.0:
        return RETURN_TO_BASE
    return int(_roulette(p, total, rng.random()))


def _seq_to_routes(seq: np.ndarray, seq_len: int, base: int) -> list[list[int]]:
    routes = []
    cur = [base]
    for v in seq[1:seq_len]:
        cur.append(int(v))
        if v == base:
            routes.append(cur)
            cur = [base]
    return routes


def construct_plan(inst: Instance, dm: DistanceMatrix, cfg: ProblemConfig, pheromone: PheromoneState,
                   eta: np.ndarray, params: MmasParams, rng: np.random.Generator) -> RoutePlan:
    """Let one ant build a plan for every UAV in the fleet."""
    seq = np.empty(inst.n + cfg.num_uavs + 1, dtype=np.int64)
    seq_len, _, _ = _construct(dm.d, pheromone.tau, heuristic_power(eta, params.beta), eta,
                               float(params.beta), inst.base_index, float(cfg.flight_range), cfg.num_uavs, rng, seq)
    return make_plan(_seq_to_routes(seq, seq_len, inst.base_index), dm, inst.num_targets)


def evaporate(pheromone: PheromoneState) -> PheromoneState:
    out = pheromone.copy()
    _evaporate(out.tau, out.rho, out.tau_min)
    return out


def deposit(pheromone: PheromoneState, plan: RoutePlan) -> PheromoneState:
    """Add ``1 / max(cost, c_floor)`` to each distinct edge of ``plan``, capped at ``tau_max``."""
    out = pheromone.copy()
    amount = 1.0 / max(plan.cost, pheromone.c_floor)
    for route in plan.routes:
        nodes = np.asarray(route.nodes, dtype=np.int64)
        _deposit(out.tau, nodes, len(nodes), amount, out.tau_max)
    return out


def run_mmas(inst: Instance, dm: DistanceMatrix | None, cfg: ProblemConfig, params: MmasParams = MmasParams(),
             *, check_bounds: bool = False) -> MmasResult:
    """Run the full colony and return the best plan plus per-iteration statistics.

    With ``check_bounds`` the pheromone matrix is scanned after every update
    cycle and an ``AssertionError`` is raised if it leaves ``[tau_min, tau_max]``.
    """
    t0 = time.perf_counter()
    dm = inst.distances if dm is None else dm
    d = dm.d
    base = inst.base_index
    fr = float(cfg.flight_range)
    total_targets = inst.num_targets

    nn_plan = nn_construct(inst, dm, cfg)
    c_init = nn_plan.cost
    state = init_pheromone(params.rho, c_init, inst.n, total_targets, params.iterations)
    tau = state.tau
    tau_max = state.tau_max
    static_tau_min = state.tau_min
    eta = heuristic_matrix(dm)
    eta_beta = heuristic_power(eta, params.beta)
    rng = np.random.default_rng(params.seed)

    m = params.num_ants
    costs = np.empty(m)
    dists = np.empty(m)
    seq = np.empty(inst.n + cfg.num_uavs + 1, dtype=np.int64)
    best_seq = np.empty_like(seq)
    per_ant = params.update_rule is UpdateRule.PER_ANT
    dynamic = params.tau_min_schedule is TauMinSchedule.DYNAMIC

    best: RoutePlan | None = None
    best_key = (math.inf, math.inf)
    best_iteration = 0
    stats: list[IterationStats] = []
    for it in range(1, params.iterations + 1):
        tau_min = compute_tau_min(params.rho, it, tau_max) if dynamic else static_tau_min
        ant, blen, violations, lo, hi = _run_iteration(
            d, tau, eta_beta, eta, float(params.beta), base, fr, cfg.num_uavs, m, rng, params.rho, tau_min, tau_max,
            state.c_floor, total_targets, per_ant, check_bounds, costs, dists, seq, best_seq,
        )
        if check_bounds and violations:
            raise AssertionError(
                f"iteration {it}: pheromone left [{tau_min}, {tau_max}] (observed [{lo}, {hi}])"
            )
        key = (float(costs[ant]), float(dists[ant]))
        if key < best_key:
            best = make_plan(_seq_to_routes(best_seq, blen, base), dm, total_targets)
            best_key = plan_sort_key(best)
            best_iteration = it
        stats.append(IterationStats(
            iteration=it,
            best_cost=best.cost,
            mean_cost=float(costs.mean()),
            best_coverage=best.coverage,
            best_total_distance=best.total_distance,
            iter_best_cost=key[0],
            iter_best_distance=key[1],
            tau_low=float(lo) if check_bounds else math.nan,
            tau_high=float(hi) if check_bounds else math.nan,
        ))

    return MmasResult(
        best=best,
        stats=stats,
        nn_plan=nn_plan,
        c_init=c_init,
        tau_max=tau_max,
        tau_min=static_tau_min,
        best_iteration=best_iteration,
        elapsed=time.perf_counter() - t0,
    )


STATS_COLUMNS = ("iteration", "best_cost", "mean_cost", "best_coverage", "best_total_distance")


def stats_to_csv(stats: Sequence[IterationStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_COLUMNS)
    for s in stats:
        w.writerow([s.iteration, repr(s.best_cost), repr(s.mean_cost), repr(s.best_coverage),
                    repr(s.best_total_distance)])
    return buf.getvalue()
