import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rsf import DomainError, IntegratorConfig, integrate, relative_volume
from rsf.analysis import classify_ancient
from rsf.io import (CSV_COLUMNS, PORTRAIT_COLUMNS, Axis, GridSpec, RunConfig, export_trajectory,
                    format_float, load_config, parse_metric, parse_point, portrait_columns,
                    portrait_rows, read_csv_table, sweep_workers, trajectory_from_json,
                    trajectory_to_json, write_csv_table, write_portrait)


@pytest.fixture
def traj(p1):
    return integrate("normalized", (0.5, 0.8, 1.2, 1.0), "backward", p1)


@given(st.floats(allow_nan=False))
def test_format_float_round_trips(v):
    assert float(format_float(v)) == v


def test_csv_round_trip_is_exact(traj, tmp_path):
    path = tmp_path / "t.csv"
    export_trajectory(traj, "csv", path)
    header, rows = read_csv_table(path)
    assert header == list(CSV_COLUMNS)
    arr = np.array(rows, dtype=float)
    np.testing.assert_array_equal(arr[:, 0], traj.times)
    np.testing.assert_array_equal(arr[:, 1:5], traj.states)
    np.testing.assert_array_equal(arr[:, 5], traj.diagnostics["S"])
    # rewriting the parsed table reproduces the bytes
    again = tmp_path / "u.csv"
    write_csv_table(header, rows, again)
    assert again.read_bytes() == path.read_bytes()


def test_json_round_trip(traj, tmp_path):
    path = tmp_path / "t.json"
    export_trajectory(traj, "json", path)
    back = trajectory_from_json(path)
    np.testing.assert_array_equal(back.times, traj.times)
    np.testing.assert_array_equal(back.states, traj.states)
    assert back.terminal == traj.terminal
    assert back.flow is traj.flow and back.direction is traj.direction
    assert json.loads(path.read_text()) == json.loads(json.dumps(trajectory_to_json(back)))


def test_export_to_stream_and_bad_format(traj):
    buf = io.StringIO()
    export_trajectory(traj, "csv", buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == len(traj) + 1
    assert lines[1].startswith("0.0,")
    with pytest.raises(ValueError):
        export_trajectory(traj, "xml", buf)


def test_parse_metric(p1):
    assert parse_metric(" 1, 2,3,4 ", p1).as_tuple() == (1.0, 2.0, 3.0, 4.0)
    g = parse_metric("slice:0.5,1,2", p1)
    assert g.x == 0.5 and relative_volume(g, p1) == pytest.approx(1.0, rel=1e-14)
    assert parse_point("slice:1,2,3") == (1.0, 2.0, 3.0)
    for bad in ("1,2,3", "1,2,3,x", "slice:1,2"):
        with pytest.raises(ValueError):
            parse_metric(bad, p1)
    with pytest.raises(DomainError):
        parse_metric("1,2,3,-4", p1)


def test_axis_parse_and_values():
    a = Axis.parse("s=0.5:4:4:log")
    np.testing.assert_allclose(a.values(), [0.5, 1, 2, 4])
    assert Axis.parse("x=0:1:3").values().tolist() == [0, 0.5, 1]
    for bad in ("x=1:0:3", "x=0:1:1", "x=0:1:3:cubic", "x=0:1:3:log", "nonsense"):
        with pytest.raises(ValueError):
            Axis.parse(bad)


def test_grid_spec(p1):
    g = GridSpec("ancient", (Axis("s", 1, 2, 2), Axis("y_over_s", 0.5, 1, 2)))
    assert g.points() == [(1, 0.5), (1, 1), (2, 0.5), (2, 1)]
    m = g.metric((2.0, 0.5), p1)
    assert (m.y, m.z, m.s) == (1.0, 1.0, 2.0)
    assert relative_volume(m, p1) == pytest.approx(1.0, rel=1e-14)
    assert GridSpec.from_dict(json.loads(json.dumps(g.to_dict()))) == g
    with pytest.raises(ValueError):
        GridSpec("ancient", (Axis("x", 1, 2, 2), Axis("y", 1, 2, 2)))
    with pytest.raises(ValueError):
        GridSpec("torus", ())


def test_run_config(tmp_path):
    rc = RunConfig.from_mapping({"n": 2, "rel-tol": 1e-8, "format": "json", "seed": 3})
    assert rc.p.n == 2 and rc.cfg.rel_tol == 1e-8 and rc.fmt == "json" and rc.seed == 3
    with pytest.raises(ValueError):
        RunConfig.from_mapping({"colour": "red"})
    with pytest.raises(ValueError):
        RunConfig(fmt="xml")
    with pytest.raises(ValueError):
        RunConfig(out=str(tmp_path / "missing" / "f.csv"))
    path = tmp_path / "c.json"
    path.write_text('{"n": 3, "t_horizon": 5}')
    assert RunConfig.from_mapping(load_config(path)).cfg.t_horizon == 5
    path.write_text("[1, 2]")
    with pytest.raises(ValueError):
        load_config(path)


def test_sweep_workers(monkeypatch):
    assert sweep_workers("3") == 3
    assert sweep_workers("") >= 1 and sweep_workers("0") >= 1
    for bad in ("-1", "many"):
        with pytest.raises(ValueError):
            sweep_workers(bad)
    monkeypatch.setenv("RSF_THREADS", "2")
    assert sweep_workers() == 2


def test_portrait_rows_deterministic(p1):
    grid = GridSpec("ancient", (Axis("s", 0.5, 2.0, 2, "log"), Axis("y_over_s", 0.5, 2.0, 2, "log")))
    serial = portrait_rows(grid, p1, workers=1)
    parallel = portrait_rows(grid, p1, workers=2)
    assert serial == parallel
    cols = portrait_columns(grid)
    assert cols[:2] == ("axis_s", "axis_y_over_s") and cols[2:] == PORTRAIT_COLUMNS
    kinds = set()
    for r in serial:
        row = dict(zip(cols, r))
        ancient = classify_ancient((row["x"], row["y"], row["z"], row["s"]), p1).ancient
        assert (row["backward"] != "BackwardSingularity") == ancient
        kinds.add(ancient)
    assert kinds == {True, False}
    buf = io.StringIO()
    write_portrait(grid, serial, "csv", buf)
    header, rows = read_csv_table(io.StringIO(buf.getvalue()))
    assert tuple(header) == cols and len(rows) == 4
    buf = io.StringIO()
    write_portrait(grid, serial, "json", buf)
    assert len(json.loads(buf.getvalue())["rows"]) == 4


def test_portrait_records_integrator_errors(p1):
    grid = GridSpec("slice", (Axis("x", 0.5, 1.0, 2), Axis("y", 0.5, 1.0, 2)))
    rows = portrait_rows(grid, p1, IntegratorConfig(max_steps=2), workers=1)
    assert all(r[-1] for r in rows if r[PORTRAIT_COLUMNS.index("forward") + 2] is None)
    assert any("max_steps" in r[-1] for r in rows)


def test_portrait_S_column_matches_closed_forms(p1):
    from rsf import scalar_curvature_slice
    from rsf.analysis import scalar_ancient_form
    grid = GridSpec("ancient", (Axis("s", 0.8, 2.0, 2), Axis("y_over_s", 0.5, 1.0, 2)))
    cols = portrait_columns(grid)
    for r in portrait_rows(grid, p1, workers=1):
        d = dict(zip(cols, r))
        assert d["S"] == pytest.approx(scalar_ancient_form(d["y"], d["s"], p1), rel=1e-12)
    grid = GridSpec("slice", (Axis("x", 0.5, 1.5, 2), Axis("y", 0.5, 1.5, 2)))
    cols = portrait_columns(grid)
    for r in portrait_rows(grid, p1, workers=1):
        d = dict(zip(cols, r))
        assert d["S"] == pytest.approx(scalar_curvature_slice(d["x"], d["y"], d["z"], p1), rel=1e-12)


def test_portrait_row_at_jensen(p1):
    from rsf import jensen_slice_value
    c = jensen_slice_value(p1)
    grid = GridSpec("slice", (Axis("x", c, 1.0, 2), Axis("y", c, 1.0, 2)))
    cols = portrait_columns(grid)
    row = dict(zip(cols, portrait_rows(grid, p1, workers=1)[0]))
    assert row["forward"] == row["backward"] == "ConvergedJensen"


def test_single_sample_trajectory_export(p1):
    tr = integrate("normalized", (1, 1, 1, 1), "forward", p1)
    buf = io.StringIO()
    export_trajectory(tr, "csv", buf)
    assert len(buf.getvalue().splitlines()) == 2
    buf = io.StringIO()
    export_trajectory(tr, "json", buf)
    term = json.loads(buf.getvalue())["terminal"]
    assert term["kind"] == "ConvergedRound" and term["t_end"] == 0.0
