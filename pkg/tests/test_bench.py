import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import random_instance
from maxcov.bench import (
    Algorithm,
    CanvasMap,
    CdConvention,
    ConfigError,
    ExperimentSpec,
    FrMode,
    ResultRecord,
    derive_seed,
    emit_report,
    emit_route_plot,
    instance_critical_distance,
    read_csv_report,
    resolve_flight_range,
    run_sweep,
)
from maxcov.mmas import MmasParams
from maxcov.model import make_plan
from maxcov.tsplib import format_tsplib

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def small_tsp(tmp_path):
    inst = random_instance(np.random.default_rng(31), 14)
    path = tmp_path / "small.tsp"
    path.write_text(format_tsplib(inst))
    return path


def _spec(path, **kw):
    base = dict(instance=str(path), uav_counts=[1, 2, 3], runs_per_cell=3, seed=17,
                mmas=MmasParams(num_ants=6, iterations=15))
    base.update(kw)
    return ExperimentSpec(**base)


@pytest.mark.parametrize("mode, expected", [("cd", 10), ("cd-half", 5), ("cd-double", 20)])
def test_resolve_flight_range(mode, expected):
    assert resolve_flight_range(mode, 10) == expected


def test_resolve_absolute():
    assert resolve_flight_range(FrMode.ABSOLUTE, 10, 3.5) == 3.5
    with pytest.raises(ConfigError):
        resolve_flight_range(FrMode.ABSOLUTE, 10, 0)
    with pytest.raises(ConfigError):
        resolve_flight_range(FrMode.ABSOLUTE, 10, None)


def test_cd_conventions(tri):
    assert instance_critical_distance(tri) == 10
    assert instance_critical_distance(tri, CdConvention.ROUND_TRIP) == 20


def test_spec_validation(small_tsp):
    with pytest.raises(ConfigError):
        _spec(small_tsp, uav_counts=[])
    with pytest.raises(ConfigError):
        _spec(small_tsp, uav_counts=[3, 2])
    with pytest.raises(ConfigError):
        _spec(small_tsp, runs_per_cell=0)
    with pytest.raises(ConfigError):
        _spec(small_tsp, fr_mode="absolute")
    with pytest.raises(ConfigError):
        _spec(small_tsp, algorithms=["ga"])
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"instance": "x", "uav_counts": [1], "colour": "red"})
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"instance": "x", "uav_counts": [1], "mmas": {"rho": 2}})


def test_spec_from_json(tmp_path, small_tsp):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "instance": small_tsp.name, "fr_mode": "cd-half", "uav_counts": [1, 4],
        "algorithms": ["mmas"], "mmas": {"num_ants": 3, "update_rule": "iteration-best"},
    }))
    spec = ExperimentSpec.from_json(spec_path)
    assert spec.instance == str(small_tsp)
    assert spec.fr_mode is FrMode.CD_HALF
    assert spec.algorithms == [Algorithm.MMAS]
    assert spec.mmas.num_ants == 3 and spec.mmas.iterations == 1000
    assert spec.runs_per_cell == 10


def test_derive_seed_pure_and_distinct():
    assert derive_seed(1, "mmas", 3, 0) == derive_seed(1, Algorithm.MMAS, 3, 0)
    seeds = {derive_seed(1, a, u, r) for a in Algorithm for u in range(1, 6) for r in range(10)}
    assert len(seeds) == 100
    assert all(0 <= s < 2**64 for s in seeds)
    assert derive_seed(2, "mmas", 3, 0) != derive_seed(1, "mmas", 3, 0)


def test_sweep_records(small_tsp):
    records = run_sweep(_spec(small_tsp))
    assert [(r.algorithm, r.uav_count) for r in records] == [
        (a, u) for a in (Algorithm.NN, Algorithm.MMAS) for u in (1, 2, 3)
    ]
    for r in records:
        assert r.runs == 3 == len(r.wall_clock) == len(r.seeds)
        assert r.mean_tc == pytest.approx(sum(r.tcs) / 3)
        if r.algorithm is Algorithm.NN:
            assert len(set(r.tcs)) == 1
    nn = [r.mean_tc for r in records if r.algorithm is Algorithm.NN]
    assert nn == sorted(nn)


def test_single_run_cell(small_tsp):
    (rec,) = run_sweep(_spec(small_tsp, algorithms=["mmas"], uav_counts=[2], runs_per_cell=1))
    assert rec.mean_tc == rec.tcs[0]


def test_sweep_reproducible_and_order_independent(small_tsp):
    a = emit_report(run_sweep(_spec(small_tsp)), "json")
    b = emit_report(run_sweep(_spec(small_tsp, uav_counts=[2, 3])), "json")
    ja, jb = json.loads(a), json.loads(b)
    key = lambda rows: {(r["algorithm"], r["uavs"]): r["tcs"] for r in rows}  # noqa: E731
    for k, v in key(jb).items():
        assert key(ja)[k] == v


def test_parallel_matches_serial(small_tsp):
    spec = _spec(small_tsp, uav_counts=[2], runs_per_cell=2)
    serial = emit_report(run_sweep(spec), "csv")
    parallel = emit_report(run_sweep(spec, jobs=2), "csv")
    assert serial == parallel


def _record(alg="nn", uavs=3, fr=12.5, tcs=(50.0, 50.0)):
    return ResultRecord(Algorithm(alg), uavs, fr, list(tcs), [100.0] * len(tcs), [1] * len(tcs),
                        [0.1] * len(tcs), 7)


def test_csv_one_record():
    text = emit_report([_record()], "csv")
    lines = text.splitlines()
    assert lines[0] == "algorithm,uavs,fr,mean_tc,mean_distance,runs,seed"
    assert len(lines) == 2


def test_csv_roundtrip():
    recs = [_record(), _record("mmas", 3, tcs=(100 / 3, 61.07382550335571, 70.0)), _record("mmas", 5)]
    assert read_csv_report(emit_report(recs, "csv")) == [r.row() for r in recs]


def test_table_shape():
    recs = [_record("nn", 1, tcs=(22.0,)), _record("nn", 3, tcs=(45.0,)),
            _record("mmas", 1, tcs=(28.0,)), _record("mmas", 3, tcs=(63.0,))]
    lines = emit_report(recs, "table").splitlines()
    assert lines[1].split() == ["UAV", "TC_NN", "TC_MMAS"]
    assert lines[2].split() == ["1", "22.0%", "28.0%"]
    assert lines[3].split() == ["3", "45.0%", "63.0%"]


def test_json_mirrors_fields():
    (row,) = json.loads(emit_report([_record()], "json"))
    assert row["algorithm"] == "nn" and row["uavs"] == 3 and row["mean_tc"] == 50.0
    assert row["tcs"] == [50.0, 50.0] and row["runs"] == 2


def test_report_errors():
    with pytest.raises(ValueError):
        emit_report([], "csv")
    with pytest.raises(ValueError):
        emit_report([_record()], "xml")


def _polylines(svg):
    root = ET.fromstring(svg)
    return root.findall(f"{SVG}polyline")


def test_plot_empty_plan(tri):
    plan = make_plan([[0, 0]], tri.distances, 2)
    svg = emit_route_plot(tri, plan)
    root = ET.fromstring(svg)
    assert _polylines(svg) == []
    assert len(root.findall(f"{SVG}circle")) == 2
    assert len(root.findall(f"{SVG}rect[@class='base']")) == 1


def test_plot_vertices_invert():
    inst = random_instance(np.random.default_rng(2), 8)
    plan = make_plan([[0, 3, 5, 1, 0], [0, 0]], inst.distances, 7)
    svg = emit_route_plot(inst, plan)
    (poly,) = _polylines(svg)
    pts = [tuple(map(float, p.split(","))) for p in poly.get("points").split()]
    assert len(pts) == 5
    cmap = CanvasMap.fit(inst.coords)
    span = np.ptp(inst.coords, axis=0).max()
    for (px, py), node in zip(pts, [0, 3, 5, 1, 0]):
        x, y = cmap.inverse(px, py)
        assert abs(x - inst.coords[node, 0]) <= 1e-3 * span
        assert abs(y - inst.coords[node, 1]) <= 1e-3 * span
        assert 0 <= px <= 800 and 0 <= py <= 800
