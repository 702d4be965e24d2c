"""TSPLIB instance parsing and distance geometry.

Only the EUC_2D subset of the format is supported: a header of ``KEY: value``
lines followed by a ``NODE_COORD_SECTION`` of ``id x y`` rows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "Metric",
    "Instance",
    "DistanceMatrix",
    "TsplibParseError",
    "MalformedHeaderError",
    "UnsupportedEdgeWeightTypeError",
    "BadCoordinateError",
    "DuplicateNodeError",
    "TooFewNodesError",
    "parse_tsplib",
    "read_tsplib",
    "format_tsplib",
    "build_distance_matrix",
    "critical_distance",
    "bundled_instance",
]


class Metric(str, enum.Enum):
    EUC2D_EXACT = "exact"
    EUC2D_ROUNDED = "rounded"


class TsplibParseError(ValueError):
    """Raised for unreadable TSPLIB input; ``lineno`` is 1-based (None if not line-specific)."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


class MalformedHeaderError(TsplibParseError):
    pass


class UnsupportedEdgeWeightTypeError(TsplibParseError):
    pass


class BadCoordinateError(TsplibParseError):
    pass


class DuplicateNodeError(TsplibParseError):
    pass


class TooFewNodesError(TsplibParseError):
    pass


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    coords: np.ndarray
    base_index: int = 0
    metric: Metric = Metric.EUC2D_EXACT

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError(f"coords must have shape (n, 2), got {coords.shape}")
        if coords.shape[0] < 2:
            raise ValueError("an instance needs a base and at least one target")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        if not 0 <= self.base_index < coords.shape[0]:
            raise ValueError(f"base_index {self.base_index} out of range for n={coords.shape[0]}")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "metric", Metric(self.metric))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def num_targets(self) -> int:
        return self.n - 1

    @property
    def targets(self) -> list[int]:
        return [i for i in range(self.n) if i != self.base_index]

    @cached_property
    def distances(self) -> "DistanceMatrix":
        return build_distance_matrix(self)

    def with_base(self, base_index: int) -> "Instance":
        return Instance(self.name, self.coords, base_index, self.metric)

    def with_metric(self, metric: Metric | str) -> "Instance":
        return Instance(self.name, self.coords, self.base_index, Metric(metric))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    d: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distances must be finite and nonnegative")
        if np.any(np.diag(d) != 0):
            raise ValueError("distance matrix must have a zero diagonal")
        if not np.array_equal(d, d.T):
            raise ValueError("distance matrix must be symmetric")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def __getitem__(self, ij):
        return self.d[ij]


_HEADER_KEYS = {
    "NAME", "TYPE", "COMMENT", "DIMENSION", "EDGE_WEIGHT_TYPE", "CAPACITY",
    "EDGE_WEIGHT_FORMAT", "EDGE_DATA_FORMAT", "NODE_COORD_TYPE", "DISPLAY_DATA_TYPE",
}


def parse_tsplib(text: str, metric: Metric | str = Metric.EUC2D_EXACT) -> Instance:
    """Parse TSPLIB text into an :class:`Instance` with node 0 as the base.

    Node ids are only checked for uniqueness; coordinates keep file order.
    """
    header: dict[str, str] = {}
    rows: list[tuple[float, float]] = []
    seen_ids: dict[str, int] = {}
    in_coords = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper == "EOF":
            break
        if not in_coords:
            if upper.startswith("NODE_COORD_SECTION"):
                _check_header(header, lineno)
                in_coords = True
                continue
            key, sep, value = line.partition(":")
            key = key.strip().upper()
            if not sep or not key:
                # "KEY value" without colon is tolerated by some writers
                parts = line.split(None, 1)
                if len(parts) == 2 and parts[0].upper() in _HEADER_KEYS:
                    key, value = parts[0].upper(), parts[1]
                else:
                    raise MalformedHeaderError(f"expected 'KEY: value', got {line!r}", lineno)
            if key.endswith("_SECTION"):
                raise MalformedHeaderError(f"unsupported section {key}", lineno)
            header[key] = value.strip()
            continue

        parts = line.split()
        if len(parts) != 3:
            raise BadCoordinateError(f"expected 'id x y', got {line!r}", lineno)
        node_id, xs, ys = parts
        try:
            x, y = float(xs), float(ys)
        except ValueError:
            raise BadCoordinateError(f"non-numeric coordinate in {line!r}", lineno) from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise BadCoordinateError(f"non-finite coordinate in {line!r}", lineno)
        if node_id in seen_ids:
            raise DuplicateNodeError(
                f"duplicate node id {node_id} (first seen on line {seen_ids[node_id]})", lineno
            )
        seen_ids[node_id] = lineno
        rows.append((x, y))

    if not in_coords:
        raise MalformedHeaderError("missing NODE_COORD_SECTION")
    if len(rows) < 2:
        raise TooFewNodesError(f"need at least 2 nodes, found {len(rows)}")
    if "DIMENSION" in header and int(header["DIMENSION"]) != len(rows):
        raise MalformedHeaderError(
            f"DIMENSION is {header['DIMENSION']} but {len(rows)} coordinates were read"
        )
    return Instance(header.get("NAME", ""), np.asarray(rows), 0, Metric(metric))


def _check_header(header: dict[str, str], lineno: int) -> None:
    ewt = header.get("EDGE_WEIGHT_TYPE")
    if ewt is None:
        raise MalformedHeaderError("missing EDGE_WEIGHT_TYPE", lineno)
    if ewt.upper() != "EUC_2D":
        raise UnsupportedEdgeWeightTypeError(f"unsupported edge weight type {ewt!r}", lineno)
    if "DIMENSION" in header:
        try:
            dim = int(header["DIMENSION"])
        except ValueError:
            raise MalformedHeaderError(f"DIMENSION is not an integer: {header['DIMENSION']!r}", lineno) from None
        if dim < 0:
            raise MalformedHeaderError(f"negative DIMENSION {dim}", lineno)


def read_tsplib(path: str | Path, metric: Metric | str = Metric.EUC2D_EXACT) -> Instance:
    path = Path(path)
    inst = parse_tsplib(path.read_text(encoding="utf-8"), metric)
    if not inst.name:
        inst = Instance(path.stem, inst.coords, inst.base_index, inst.metric)
    return inst


def format_tsplib(inst: Instance) -> str:
    """Serialize coordinates back to EUC_2D TSPLIB text (ids are 1-based, floats exact via repr)."""
    lines = [
        f"NAME: {inst.name}",
        "TYPE: TSP",
        f"DIMENSION: {inst.n}",
        "EDGE_WEIGHT_TYPE: EUC_2D",
        "NODE_COORD_SECTION",
    ]
    lines += [f"{i + 1} {float(x)!r} {float(y)!r}" for i, (x, y) in enumerate(inst.coords)]
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def bundled_instance(name: str = "ch150", metric: Metric | str = Metric.EUC2D_EXACT) -> Instance:
    """Load one of the TSPLIB files shipped in ``maxcov/data``."""
    path = Path(__file__).parent / "data" / f"{name}.tsp"
    if not path.exists():
        raise FileNotFoundError(f"no bundled instance named {name!r}")
    return read_tsplib(path, metric)


def build_distance_matrix(inst: Instance) -> DistanceMatrix:
    diff = inst.coords[:, None, :] - inst.coords[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if inst.metric is Metric.EUC2D_ROUNDED:
        # TSPLIB nint(): round half up
        d = np.floor(d + 0.5)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)


def critical_distance(dm: DistanceMatrix, base: int = 0) -> float:
    """Distance from ``base`` to its farthest other node."""
    row = np.delete(dm.d[base], base)
    return float(row.max())
