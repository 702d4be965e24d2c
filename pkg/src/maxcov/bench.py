"""Experiment harness: flight-range cases, UAV sweeps, seeded replications, reports and plots."""

from __future__ import annotations

import csv
import enum
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .mmas import MmasParams, run_mmas
from .model import ProblemConfig, RoutePlan, validate_plan
from .nn import nn_construct
from .tsplib import Instance, Metric, bundled_instance, critical_distance, read_tsplib

__all__ = [
    "FrMode",
    "CdConvention",
    "Algorithm",
    "ExperimentSpec",
    "ResultRecord",
    "ReportRow",
    "ConfigError",
    "SweepError",
    "resolve_flight_range",
    "instance_critical_distance",
    "derive_seed",
    "load_instance",
    "solve",
    "run_sweep",
    "emit_report",
    "read_csv_report",
    "CanvasMap",
    "emit_route_plot",
]


class ConfigError(ValueError):
    pass


class SweepError(RuntimeError):
    pass


class FrMode(str, enum.Enum):
    CD = "cd"
    CD_HALF = "cd-half"
    CD_DOUBLE = "cd-double"
    ABSOLUTE = "absolute"


class CdConvention(str, enum.Enum):
    # farthest: distance from base to the farthest target
    # round-trip: twice that, i.e. the out-and-back flight to the farthest target
    FARTHEST = "farthest"
    ROUND_TRIP = "round-trip"


class Algorithm(str, enum.Enum):
    NN = "nn"
    MMAS = "mmas"


# stable ids for seed mixing; never renumber
_ALGORITHM_IDS = {Algorithm.NN: 1, Algorithm.MMAS: 2}


def resolve_flight_range(fr_mode: FrMode | str, cd: float, value: float | None = None) -> float:
    fr_mode = FrMode(fr_mode)
    if fr_mode is FrMode.ABSOLUTE:
        if value is None or not value > 0:
            raise ConfigError(f"absolute flight range must be positive, got {value}")
        return float(value)
    if not cd > 0:
        raise ConfigError(f"critical distance must be positive, got {cd}")
    if fr_mode is FrMode.CD:
        return float(cd)
    if fr_mode is FrMode.CD_HALF:
        return cd / 2.0
    return 2.0 * cd


def instance_critical_distance(inst: Instance, convention: CdConvention | str = CdConvention.FARTHEST) -> float:
    cd = critical_distance(inst.distances, inst.base_index)
    return 2.0 * cd if CdConvention(convention) is CdConvention.ROUND_TRIP else cd


def derive_seed(base_seed: int, algorithm: Algorithm | str, uav_count: int, run_index: int) -> int:
    """Run seed as a pure function of its cell coordinates.

    Mixes ``(base_seed, algorithm id, uav_count, run_index)`` through
    :class:`numpy.random.SeedSequence` and takes the first 64-bit word.
    """
    ss = np.random.SeedSequence([int(base_seed), _ALGORITHM_IDS[Algorithm(algorithm)], int(uav_count), int(run_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ExperimentSpec:
    instance: str
    uav_counts: list[int]
    fr_mode: FrMode = FrMode.CD
    fr: float | None = None
    metric: Metric = Metric.EUC2D_EXACT
    base: int = 0
    cd_convention: CdConvention = CdConvention.FARTHEST
    algorithms: list[Algorithm] = field(default_factory=lambda: [Algorithm.NN, Algorithm.MMAS])
    runs_per_cell: int = 10
    mmas: MmasParams = field(default_factory=MmasParams)
    seed: int = 0

    def __post_init__(self):
        try:
            self.fr_mode = FrMode(self.fr_mode)
            self.metric = Metric(self.metric)
            self.cd_convention = CdConvention(self.cd_convention)
            self.algorithms = [Algorithm(a) for a in self.algorithms]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.uav_counts:
            raise ConfigError("uav_counts must not be empty")
        if any(int(u) != u or u < 1 for u in self.uav_counts):
            raise ConfigError(f"uav_counts must be positive integers, got {self.uav_counts}")
        if any(b <= a for a, b in zip(self.uav_counts, self.uav_counts[1:])):
            raise ConfigError(f"uav_counts must be strictly increasing, got {self.uav_counts}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be at least 1")
        if self.fr_mode is FrMode.ABSOLUTE and (self.fr is None or not self.fr > 0):
            raise ConfigError("fr_mode 'absolute' needs a positive 'fr'")

    @classmethod
    def from_dict(cls, data: dict[str, Any], root: Path | None = None) -> "ExperimentSpec":
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
        if "instance" not in data or "uav_counts" not in data:
            raise ConfigError("spec needs 'instance' and 'uav_counts'")
        mm = data.pop("mmas", None) or {}
        try:
            mmas = MmasParams(**mm)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad mmas parameters: {exc}") from None
        inst = str(data.pop("instance"))
        if root is not None and not Path(inst).is_absolute() and (root / inst).exists():
            inst = str(root / inst)
        try:
            return cls(instance=inst, mmas=mmas, **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentSpec":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), root=path.parent)


@dataclass
class ResultRecord:
    algorithm: Algorithm
    uav_count: int
    fr: float
    tcs: list[float]
    distances: list[float]
    seeds: list[int]
    wall_clock: list[float]
    base_seed: int

    @property
    def runs(self) -> int:
        return len(self.tcs)

    @property
    def mean_tc(self) -> float:
        return float(np.mean(self.tcs))

    @property
    def mean_distance(self) -> float:
        return float(np.mean(self.distances))

    def row(self) -> "ReportRow":
        return ReportRow(self.algorithm.value, self.uav_count, self.fr, self.mean_tc,
                         self.mean_distance, self.runs, self.base_seed)


@dataclass(frozen=True)
class ReportRow:
    algorithm: str
    uavs: int
    fr: float
    mean_tc: float
    mean_distance: float
    runs: int
    seed: int


CSV_COLUMNS = ("algorithm", "uavs", "fr", "mean_tc", "mean_distance", "runs", "seed")


def load_instance(path: str, metric: Metric | str = Metric.EUC2D_EXACT, base: int = 0) -> Instance:
    """Read a TSPLIB file; a bare name like ``ch150`` falls back to the bundled copy."""
    p = Path(path)
    if p.exists():
        inst = read_tsplib(p, metric)
    elif p.suffix == "" and p.parent == Path("."):
        inst = bundled_instance(path, metric)
    else:
        raise FileNotFoundError(f"instance file not found: {path}")
    if not 0 <= base < inst.n:
        raise ConfigError(f"base index {base} out of range for n={inst.n}")
    return inst.with_base(base) if base != inst.base_index else inst


def solve(inst: Instance, cfg: ProblemConfig, algorithm: Algorithm | str, params: MmasParams | None = None):
    """Run one solver; returns ``(plan, mmas_result_or_None)``."""
    if Algorithm(algorithm) is Algorithm.NN:
        return nn_construct(inst, inst.distances, cfg), None
    result = run_mmas(inst, inst.distances, cfg, params or MmasParams())
    return result.best, result


def _run_cell(args) -> tuple[float, float, float]:
    inst, cfg, algorithm, params = args
    t0 = time.perf_counter()
    plan, _ = solve(inst, cfg, algorithm, params)
    elapsed = time.perf_counter() - t0
    problems = validate_plan(plan, inst, cfg)
    if problems:
        raise SweepError(f"{algorithm.value} with {cfg.num_uavs} UAVs produced an invalid plan: {problems}")
    return plan.coverage, plan.total_distance, elapsed


def run_sweep(spec: ExperimentSpec, jobs: int = 1, progress=None) -> list[ResultRecord]:
    """Run every (algorithm, uav_count) cell ``runs_per_cell`` times.

    Output is ordered by algorithm, then UAV count, regardless of ``jobs``.
    """
    inst = load_instance(spec.instance, spec.metric, spec.base)
    cd = instance_critical_distance(inst, spec.cd_convention)
    fr = resolve_flight_range(spec.fr_mode, cd, spec.fr)

    tasks = []
    keys = []
    for alg in spec.algorithms:
        for u in spec.uav_counts:
            cfg = ProblemConfig(fr, u)
            for r in range(spec.runs_per_cell):
                seed = derive_seed(spec.seed, alg, u, r)
                params = replace(spec.mmas, seed=seed)
                tasks.append((inst, cfg, alg, params))
                keys.append((alg, u, seed))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, tasks))
    else:
        outcomes = []
        for task in tasks:
            outcomes.append(_run_cell(task))
            if progress is not None:
                progress(task[2], task[1].num_uavs, outcomes[-1])

    records: dict[tuple[Algorithm, int], ResultRecord] = {}
    for (alg, u, seed), (tc, dist, elapsed) in zip(keys, outcomes):
        rec = records.setdefault((alg, u), ResultRecord(alg, u, fr, [], [], [], [], spec.seed))
        rec.tcs.append(tc)
        rec.distances.append(dist)
        rec.seeds.append(seed)
        rec.wall_clock.append(elapsed)
    return list(records.values())


def emit_report(records: Sequence[ResultRecord], fmt: str = "csv") -> str:
    if not records:
        raise ValueError("no records to report")
    fmt = fmt.lower()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            row = rec.row()
            w.writerow([row.algorithm, row.uavs, repr(row.fr), repr(row.mean_tc),
                        repr(row.mean_distance), row.runs, row.seed])
        return buf.getvalue()
    if fmt == "json":
        out = []
        for rec in records:
            out.append({
                "algorithm": rec.algorithm.value,
                "uavs": rec.uav_count,
                "fr": rec.fr,
                "mean_tc": rec.mean_tc,
                "mean_distance": rec.mean_distance,
                "runs": rec.runs,
                "seed": rec.base_seed,
                "tcs": rec.tcs,
                "distances": rec.distances,
                "run_seeds": rec.seeds,
                "wall_clock": rec.wall_clock,
            })
        return json.dumps(out, indent=2) + "\n"
    if fmt == "table":
        return _table(records)
    raise ValueError(f"unknown report format {fmt!r}")


def _table(records: Sequence[ResultRecord]) -> str:
    algs = []
    for rec in records:
        if rec.algorithm not in algs:
            algs.append(rec.algorithm)
    blocks = []
    for fr in sorted({rec.fr for rec in records}):
        cells = {(r.algorithm, r.uav_count): r for r in records if r.fr == fr}
        uavs = sorted({u for _, u in cells})
        header = ["UAV"] + [f"TC_{a.value.upper()}" for a in algs]
        rows = [[str(u)] + [f"{cells[(a, u)].mean_tc:.1f}%" if (a, u) in cells else "-" for a in algs]
                for u in uavs]
        widths = [max(len(x) for x in col) for col in zip(header, *rows)]
        lines = [f"FR = {fr:.4f}"]
        lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
        lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def read_csv_report(text: str) -> list[ReportRow]:
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        rows.append(ReportRow(r["algorithm"], int(r["uavs"]), float(r["fr"]), float(r["mean_tc"]),
                              float(r["mean_distance"]), int(r["runs"]), int(r["seed"])))
    return rows


@dataclass(frozen=True)
class CanvasMap:
    """Uniform-scale affine map from instance coordinates to SVG canvas pixels (y flipped)."""

    scale: float
    x0: float
    y0: float
    margin: float
    height: float

    @classmethod
    def fit(cls, coords: np.ndarray, size: float = 800.0, margin: float = 20.0) -> "CanvasMap":
        lo = coords.min(axis=0)
        span = float((coords.max(axis=0) - lo).max())
        scale = (size - 2 * margin) / span if span > 0 else 1.0
        return cls(scale, float(lo[0]), float(lo[1]), margin, size)

    def forward(self, x: float, y: float) -> tuple[float, float]:
        return (self.margin + (x - self.x0) * self.scale,
                self.height - self.margin - (y - self.y0) * self.scale)

    def inverse(self, px: float, py: float) -> tuple[float, float]:
        return (self.x0 + (px - self.margin) / self.scale,
                self.y0 + (self.height - self.margin - py) / self.scale)


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def emit_route_plot(inst: Instance, plan: RoutePlan, size: float = 800.0, title: str | None = None) -> str:
    """Render targets, base and one polyline per non-empty route as an SVG document."""
    cmap = CanvasMap.fit(inst.coords, size)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" height="{size:g}" '
        f'viewBox="0 0 {size:g} {size:g}">',
        f"<title>{escape(title or inst.name or 'route plan')}</title>",
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for k, route in enumerate(plan.routes):
        if len(route.targets) == 0:
            continue
        pts = " ".join("{:.6f},{:.6f}".format(*cmap.forward(*inst.coords[v])) for v in route.nodes)
        out.append(f'<polyline class="route" data-route="{k}" points="{pts}" fill="none" '
                   f'stroke="{_PALETTE[k % len(_PALETTE)]}" stroke-width="1.5"/>')
    for i, (x, y) in enumerate(inst.coords):
        if i == inst.base_index:
            continue
        px, py = cmap.forward(x, y)
        fill = "black" if i in plan.visited else "#bbbbbb"
        out.append(f'<circle class="target" data-node="{i}" cx="{px:.6f}" cy="{py:.6f}" r="3" fill="{fill}"/>')
    bx, by = cmap.forward(*inst.coords[inst.base_index])
    out.append(f'<rect class="base" data-node="{inst.base_index}" x="{bx - 6:.6f}" y="{by - 6:.6f}" '
               f'width="12" height="12" fill="red"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
