import json
import math
import os
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hzplan import bench as bench_mod
from hzplan.bench import run_benchmark
from hzplan.cli import main
from hzplan.construct import ConvexRegion
from hzplan.errors import MergeRequired, NotPlottable, ScenarioError, SolverStall, StateInObstacle, Unreachable
from hzplan.oracle import segment_blocked, shortest_path, visibility_graph_oracle, _halfspaces
from hzplan.planner import PlannerParams, plan
from hzplan.records import TRACE_HEADER, RunRecord, read_trace, trace_csv, write_trace
from hzplan.scenario import (
    Scenario,
    bundled_scenario,
    bundled_scenario_path,
    dumps_scenario,
    load_scenario,
    loads_scenario,
    write_scenario,
)
from hzplan.sets import Box
from hzplan.svg import emit_svg

SVG = "{http://www.w3.org/2000/svg}"


def square_file(tmp_path, start=(1, 5), goal=(9, 5), obstacles=([[4, 4], [6, 4], [6, 6], [4, 6]],), name="sq"):
    data = {"name": name, "dimension": 2, "workspace": {"lower": [0, 0], "upper": [10, 10]},
            "obstacles": [{"vertices": v} for v in obstacles], "start": list(start), "goal": list(goal)}
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(data))
    return p


# -- scenarios -----------------------------------------------------------------

def test_load_minimal_2d(tmp_path):
    sc = load_scenario(square_file(tmp_path))
    assert sc.dimension == 2 and len(sc.obstacles) == 1 and sc.free_regions is None


def test_start_inside_obstacle_loads_then_planner_rejects(tmp_path):
    sc = load_scenario(square_file(tmp_path, start=(5, 5)))
    with pytest.raises(StateInObstacle):
        plan(sc)


def test_3d_round_trip(tmp_path):
    sc = bundled_scenario("corridor")
    assert sc.dimension == 3 and len(sc.free_regions) == 4
    write_scenario(sc, tmp_path / "c.json")
    assert load_scenario(tmp_path / "c.json") == sc


def test_parse_error_reports_line_and_column():
    with pytest.raises(ScenarioError) as exc:
        loads_scenario('{\n  "dimension": 2,\n  "start": [1, 2\n}')
    assert exc.value.where.startswith("line 4, column 1")


@pytest.mark.parametrize("patch, where", [
    ({"start": [1, "x"]}, "start"),
    ({"workspace": {"lower": [0, 0], "upper": [10]}}, "workspace.upper"),
    ({"obstacles": [{"vertices": [[0, 0], [1, 1]]}]}, "obstacles[0].vertices"),
    ({"obstacles": [{"vertices": [[0, 0], [1, 0], [0, math.inf]]}]}, "obstacles[0].vertices[2]"),
    ({"goal": [11, 5]}, "goal"),
    ({"dimension": True}, "dimension"),
])
def test_validation_field_paths(patch, where):
    data = {"dimension": 2, "workspace": {"lower": [0, 0], "upper": [10, 10]},
            "obstacles": [], "start": [1, 1], "goal": [9, 9]}
    data.update(patch)
    with pytest.raises(ScenarioError) as exc:
        loads_scenario(json.dumps(data).replace("Infinity", "1e999"))
    assert exc.value.where == where


def test_exactly_one_region_list():
    base = {"dimension": 2, "workspace": {"lower": [0, 0], "upper": [1, 1]}, "start": [0, 0], "goal": [1, 1]}
    with pytest.raises(ScenarioError):
        loads_scenario(json.dumps(base))
    with pytest.raises(ScenarioError):
        loads_scenario(json.dumps({**base, "obstacles": [], "free_regions": []}))


def test_overlapping_obstacles_need_merge(tmp_path):
    p = square_file(tmp_path, obstacles=([[1, 1], [3, 1], [3, 3], [1, 3]], [[2, 2], [4, 2], [4, 4], [2, 4]],
                                         [[3, 1], [5, 1], [5, 2], [3, 2]]))
    with pytest.raises(MergeRequired) as exc:
        load_scenario(p)
    assert exc.value.pairs == [(0, 1)]  # touching pairs (0, 2) are fine


@st.composite
def scenarios(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    if draw(st.booleans()):
        obstacles = []
        for i in range(3):
            for j in range(3):
                if rng.random() < 0.5:
                    lo = np.array([i, j]) * 3 + rng.uniform(0.1, 1.0, 2)
                    hi = lo + rng.uniform(0.2, 1.5, 2)
                    obstacles.append(ConvexRegion([lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]]))
        return Scenario(f"s{seed}", 2, Box([0, 0], [9, 9]), rng.uniform(0, 9, 2), rng.uniform(0, 9, 2),
                        obstacles=obstacles)
    regions = [ConvexRegion(rng.normal(size=(6, 3)) + k) for k in range(int(rng.integers(1, 4)))]
    return Scenario("", 3, Box([-9, -9, -9], [9, 9, 9]), rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3),
                    free_regions=regions)


@settings(max_examples=40, deadline=None)
@given(scenarios())
def test_round_trip_property(sc):
    assert loads_scenario(dumps_scenario(sc)) == sc


def test_bundled_scenarios_load():
    for name in ("empty", "wall_gap", "narrow_gap", "corridor", "clutter",
                 "demos/maze", "demos/enclosure", "demos/narrow_passage_3d"):
        assert bundled_scenario_path(name).exists()
        bundled_scenario(name)


# -- oracle --------------------------------------------------------------------

def test_oracle_examples(tmp_path):
    assert visibility_graph_oracle(load_scenario(square_file(tmp_path, obstacles=()))) == pytest.approx(8.0)
    # around the top (or bottom) pair of corners of the square
    assert visibility_graph_oracle(load_scenario(square_file(tmp_path))) == pytest.approx(2 * math.sqrt(10) + 2)
    cost, pts = shortest_path(bundled_scenario("wall_gap"))
    assert cost == pytest.approx(2 * math.sqrt(13) + 2)
    assert [tuple(p) for p in pts[1:-1]] == [(4.0, 6.0), (6.0, 6.0)]


def test_oracle_unreachable(tmp_path):
    walls = ([[0, 4], [10, 4], [10, 6], [0, 6]],)
    with pytest.raises(Unreachable):
        visibility_graph_oracle(load_scenario(square_file(tmp_path, start=(1, 1), goal=(9, 9), obstacles=walls)))


def test_seam_between_touching_obstacles_is_blocked():
    A = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    B = A + [1, 0]
    hs = [_halfspaces(A), _halfspaces(B)]
    assert segment_blocked(np.array([1.0, -1.0]), np.array([1.0, 2.0]), hs)  # along the seam
    assert not segment_blocked(np.array([-1.0, 1.0]), np.array([3.0, 1.0]), hs)  # along the outer edge
    assert not segment_blocked(np.array([0.0, 1.0]), np.array([1.0, 2.0]), hs)  # grazing a corner


def test_oracle_bounds_planner_on_clutter():
    sc = bundled_scenario("clutter")
    res = plan(sc, PlannerParams(n_samples=30, n_max=3, seed=0))
    assert visibility_graph_oracle(sc) <= res.best_cost + 1e-9


# -- records and SVG -------------------------------------------------------------

def record(name, **kw):
    sc = bundled_scenario(name)
    params = PlannerParams(**{"n_samples": 30, **kw})
    return RunRecord(sc, params, plan(sc, params))


def test_trace_csv_schema(tmp_path):
    rec = record("wall_gap")
    text = trace_csv(rec)
    assert text.splitlines()[0] == "iteration,path_id,cost,best_cost,inactive_leaves"
    assert tuple(text.splitlines()[0].split(",")) == TRACE_HEADER
    write_trace(rec, tmp_path / "t.csv")
    rows = read_trace(tmp_path / "t.csv")
    assert len(rows) == len(rec.rows)
    keys = [(int(r["iteration"]), int(r["path_id"])) for r in rows]
    assert keys == sorted(keys)
    assert [float(r["best_cost"]) for r in rows] == [r.best_cost for r in rec.rows]


def parse_svg(path):
    root = ET.parse(path).getroot()
    layers = {g.get("id"): g for g in root.iter(f"{SVG}g")}
    return root, layers


def test_svg_empty_scene(tmp_path):
    rec = record("empty")
    emit_svg(rec, tmp_path / "e.svg")
    _, layers = parse_svg(tmp_path / "e.svg")
    assert set(layers) >= {"workspace", "obstacles", "leaves", "faces", "best-path", "informed"}
    assert len(layers["workspace"].findall(f"{SVG}rect")) == 1
    assert len(layers["best-path"].findall(f"{SVG}path")) == 1


def test_svg_structure_and_ellipse(tmp_path):
    rec = record("wall_gap")
    emit_svg(rec, tmp_path / "w.svg")
    _, layers = parse_svg(tmp_path / "w.svg")
    res = rec.result
    assert len(layers["best-path"].findall(f"{SVG}path")) == len(res.best_path.waypoints) + 1
    assert len(layers["obstacles"].findall(f"{SVG}polygon")) == 2
    assert len(layers["leaves"].findall(f"{SVG}polygon")) == len(res.regions)
    (ell,) = layers["informed"].findall(f"{SVG}ellipse")
    scale = float(ell.get("data-scale"))
    c = res.best_cost
    d = np.linalg.norm(rec.scenario.goal - rec.scenario.start)
    a, b = c / 2, math.sqrt(c * c / 4 - d * d / 4)
    assert float(ell.get("rx")) / scale == pytest.approx(a, abs=1e-6)
    assert float(ell.get("ry")) / scale == pytest.approx(b, abs=1e-6)


def test_svg_3d_needs_projection(tmp_path):
    rec = record("corridor")
    with pytest.raises(NotPlottable):
        emit_svg(rec, tmp_path / "c.svg")
    emit_svg(rec, tmp_path / "c.svg", projection=(0, 1))
    _, layers = parse_svg(tmp_path / "c.svg")
    assert len(layers["best-path"].findall(f"{SVG}path")) == 4
    with pytest.raises(NotPlottable):
        emit_svg(rec, tmp_path / "c.svg", projection=(0, 0))


# -- benchmark -------------------------------------------------------------------

def bench_dir(tmp_path, *names):
    d = tmp_path / "bench"
    d.mkdir()
    for n in names:
        shutil.copy(bundled_scenario_path(n), d / f"{n}.json")
    return d


def test_bench_empty_and_3d(tmp_path):
    summary = run_benchmark(bench_dir(tmp_path, "empty", "corridor"), PlannerParams(n_samples=20), seeds=(0, 1))
    assert summary.passed
    by_name = {r.scenario: r for r in summary.rows}
    assert by_name["empty"].gap_pct == pytest.approx(0.0, abs=1e-9)
    assert by_name["corridor"].gap_pct is None
    assert "n/a" in summary.table() and "n/a" in summary.to_csv()
    assert summary.to_csv().splitlines()[0].startswith("scenario,seed,status,cost,oracle_cost,gap_pct")


def test_bench_flags_threshold_failures(tmp_path, monkeypatch):
    monkeypatch.setattr(bench_mod, "MAX_GAP_LIMIT", -1.0)
    summary = run_benchmark(bench_dir(tmp_path, "wall_gap"), PlannerParams(n_samples=20), seeds=(0,))
    assert not summary.passed and "max gap" in summary.failures[0]


# -- command line ------------------------------------------------------------------

def test_cli_plan_outputs(tmp_path, capsys):
    svg, trace = tmp_path / "o.svg", tmp_path / "o.csv"
    code = main(["plan", str(bundled_scenario_path("wall_gap")), "--samples", "30", "--seed", "1",
                 "--svg", str(svg), "--trace", str(trace)])
    out = capsys.readouterr().out
    assert code == 0 and "status: solved" in out
    assert svg.exists() and read_trace(trace)


def test_cli_exit_codes(tmp_path, capsys, monkeypatch):
    ring = ([[6, 6], [9, 6], [9, 6.5], [6, 6.5]], [[6, 8.5], [9, 8.5], [9, 9], [6, 9]],
            [[6, 6.5], [6.5, 6.5], [6.5, 8.5], [6, 8.5]], [[8.5, 6.5], [9, 6.5], [9, 8.5], [8.5, 8.5]])
    closed = square_file(tmp_path, start=(1, 1), goal=(7.5, 7.5), obstacles=ring, name="closed")
    assert main(["plan", str(closed)]) == 2
    assert main(["oracle", str(closed)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert main(["plan", str(bad)]) == 3
    assert main(["plan", str(tmp_path / "missing.json")]) == 3
    assert main(["plan", str(square_file(tmp_path, start=(5, 5), name="inside"))]) == 3
    assert main(["plan", str(bundled_scenario_path("corridor")), "--samples", "5", "--svg",
                 str(tmp_path / "x.svg")]) == 3
    assert main(["oracle", str(bundled_scenario_path("wall_gap"))]) == 0
    assert float(capsys.readouterr().out.strip().splitlines()[-1]) == pytest.approx(2 * math.sqrt(13) + 2)

    def stall(*a, **k):
        raise SolverStall("iteration cap")

    monkeypatch.setattr("hzplan.cli.plan", stall)
    assert main(["plan", str(bundled_scenario_path("empty"))]) == 4


def test_cli_bench_exit_code(tmp_path, monkeypatch, capsys):
    d = bench_dir(tmp_path, "empty")
    assert main(["bench", str(d), "--seeds", "0,1", "--csv", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "b.csv").read_text().count("\n") == 3
    monkeypatch.setattr(bench_mod, "ITERATION_LIMIT", 0)
    assert main(["bench", str(d)]) != 0


def test_cli_rejects_bad_arguments():
    with pytest.raises(SystemExit):
        main(["plan", "x.json", "--samples", "0"])
    with pytest.raises(SystemExit):
        main(["bench", "d", "--seeds", "a,b"])


def test_console_script(tmp_path):
    exe = shutil.which("hzplan") or [sys.executable, "-m", "hzplan.cli"]
    cmd = ([exe] if isinstance(exe, str) else exe) + ["oracle", str(bundled_scenario_path("empty"))]
    out = subprocess.run(cmd, capture_output=True, text=True, env={**os.environ, "HZPLAN_THREADS": "1"})
    assert out.returncode == 0 and float(out.stdout) == pytest.approx(10.0)
