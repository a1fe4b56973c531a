import io
import json
from pathlib import Path

import numpy as np
import pytest

import nconn
from nconn.geometry import five_d_chart
from nconn.harness import cli
from nconn.harness.grid import build_grid, parse_grid_spec
from nconn.harness.model import InputError, load_model, parse_tolerance_overrides
from nconn.harness.report import canonical_json, format_float

MODELS = Path(cli.__file__).with_name("models")
VACUUM = MODELS / "vacuum.json"
FLAT = MODELS / "flat.json"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def write_model(tmp_path, body, name="m.json"):
    p = tmp_path / name
    p.write_text(json.dumps(body))
    return p


def curved(**extra):
    body = {"format": "nconn-model/1", "name": "curved",
            "chart": {"horizontal": ["x1", "x2"], "vertical": ["y1", "y2"]},
            "metric": {"g": ["1 + x2^2/4", "exp(x1/2)"], "h": ["2", "3"]},
            "nconnection": [["x2", "0"], ["0", "x1"]],
            "grid": {"axes": {c: {"range": [-1, 1], "points": 3}
                              for c in ("x1", "x2", "y1", "y2")}}}
    body.update(extra)
    return body


# -- commands and exit codes -----------------------------------------------------------

def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.run(["--version"])
    assert exc.value.code == 0
    assert nconn.__version__ in capsys.readouterr().out


@pytest.mark.parametrize("command", ["check", "residuals", "lc-compare", "geometry"])
def test_flat_model_passes(command):
    code, out, _ = call(command, "--model", FLAT, "--jobs", 1)
    assert code == 0
    rep = json.loads(out)
    assert rep["passed"] and rep["command"] == command and rep["exit_code"] == 0


def test_flat_residuals_are_zero():
    _, out, _ = call("residuals", "--model", FLAT)
    rep = json.loads(out)
    assert all(eq["max"] == 0.0 for eq in rep["equations"].values())
    assert rep["domain"]["points"] == 5 ** 4


@pytest.mark.parametrize("command", ["check", "ansatz-verify", "solve", "residuals"])
def test_vacuum_model_passes(command):
    code, out, _ = call(command, "--model", VACUUM, "--grid", "x2=-1:1:5,x3=-1:1:5,v=0.5:1.5:5")
    assert code == 0, out
    rep = json.loads(out)
    if command == "ansatz-verify":
        assert rep["variants"]["corrected"]["worst_relative"] < 1e-8
        assert rep["structure_passed"]
    if command == "solve":
        assert rep["status"] == "verified"


def test_unknown_identifier_exits_2(tmp_path):
    p = write_model(tmp_path, curved(metric={"g": ["1 + x9", "1"], "h": ["1", "1"]}))
    code, out, err = call("check", "--model", p)
    assert code == 2 and out == ""
    info = json.loads(err)["error"]
    assert "x9" in info["message"] and info["path"].startswith("metric.g")
    assert info["offset"] == 4


def test_schema_violation_exits_2(tmp_path):
    p = write_model(tmp_path, {"format": "nconn-model/1", "bogus": 1})
    code, _, err = call("check", "--model", p)
    assert code == 2
    assert json.loads(err)["error"]["kind"] == "schema"


def test_missing_file_and_bad_overrides(tmp_path):
    assert call("check", "--model", tmp_path / "nope.json")[0] == 2
    assert call("check", "--model", FLAT, "--tol", "residual")[0] == 2
    assert call("check", "--model", FLAT, "--tol", "bogus=1")[0] == 2
    assert call("residuals", "--model", FLAT, "--grid", "q1=0:1")[0] == 2


def test_domain_density_exits_3(tmp_path):
    body = curved(metric={"g": ["1", "1/x1"], "h": ["1", "1"]}, nconnection=[["0", "0"], ["0", "0"]])
    body["grid"]["axes"]["x1"] = {"range": [-1, 1], "points": 5}
    code, out, _ = call("residuals", "--model", write_model(tmp_path, body))
    assert code == 3
    rep = json.loads(out)
    assert rep["domain"]["fraction"] == pytest.approx(0.2)
    assert not rep["domain"]["passed"]


def test_curved_model_without_sources_fails_tolerance(tmp_path):
    code, out, _ = call("residuals", "--model", write_model(tmp_path, curved()))
    assert code == 1
    rep = json.loads(out)
    worst = max(rep["equations"].values(), key=lambda e: e["max"])
    assert worst["worst"] and set(worst["worst"][0]["coords"]) == {"x1", "x2", "y1", "y2"}
    assert rep["failing"]


def test_tolerance_override_can_pass_a_run(tmp_path):
    p = write_model(tmp_path, curved())
    assert call("residuals", "--model", p, "--tol", "residual=1e6")[0] == 0


# -- reports -----------------------------------------------------------------------------

def test_report_is_byte_identical_across_runs_and_jobs():
    argv = ("residuals", "--model", VACUUM, "--grid", "x2=-1:1:6,x3=-1:1:6,v=0.5:1.5:6")
    outs = {call(*argv, "--jobs", j)[1] for j in (1, 1, 3)}
    assert len(outs) == 1


def test_seeded_random_grid_is_reproducible():
    argv = ("residuals", "--model", VACUUM, "--grid", "v=0.5:1.5,random=50")
    a = call(*argv, "--seed", 7)[1]
    assert a == call(*argv, "--seed", 7, "--jobs", 2)[1]
    assert a != call(*argv, "--seed", 8)[1]


def test_out_directory_artifacts(tmp_path):
    code, out, _ = call("residuals", "--model", FLAT, "--output", "csv", "--out", tmp_path)
    assert code == 0 and out == ""
    rep = json.loads((tmp_path / "report.json").read_text())
    assert "runtime_seconds" not in json.dumps(rep)
    assert json.loads((tmp_path / "timing.json").read_text())["runtime_seconds"] >= 0
    rows = (tmp_path / "residuals.csv").read_text().splitlines()
    assert len(rows) == 1 + 5 ** 4 * len(rep["equations"])


def test_csv_row_count_on_32_cubed_grid(tmp_path):
    body = {"format": "nconn-model/1", "name": "plane",
            "chart": {"horizontal": ["x1", "x2"], "vertical": ["y1"]},
            "metric": {"g": ["1", "1"], "h": ["1"]}}
    p = write_model(tmp_path, body)
    code, out, _ = call("residuals", "--model", p, "--output", "csv", "--jobs", 1,
                        "--grid", "x1=0:1:32,x2=0:1:32,y1=0:1:32")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) - 1 == 32 ** 3 * 9
    assert lines[0].split(",")[:3] == ["point", "x1", "x2"]


def test_empty_grid_gives_valid_report():
    code, out, _ = call("residuals", "--model", FLAT, "--grid", "x1=0:1:0")
    rep = json.loads(out)
    assert code == 0 and rep["domain"]["points"] == 0
    code, out, _ = call("residuals", "--model", FLAT, "--grid", "x1=0:1:0", "--output", "csv")
    assert code == 0 and len(out.splitlines()) == 1


def test_geometry_dump_has_expressions_and_values(tmp_path):
    body = curved(components=["nconnection", "anholonomy"],
                  points=[{"x1": 0.5, "x2": 0.0, "y1": 0.0, "y2": 0.0}])
    code, out, _ = call("geometry", "--model", write_model(tmp_path, body))
    rep = json.loads(out)
    assert code == 0
    comps = rep["components"]
    assert comps["N^4_-2"] == {"expr": "x1", "values": [0.5]}
    # N_1^3 = x2 gives Omega^3_12 = -1 and W^3_12 = +1
    assert comps["W^3_-1-2"] == {"expr": "1", "values": [1.0]}
    assert comps["W^3_-2-1"]["values"] == [-1.0]


def test_lc_compare_with_ansatz_reports_measurement():
    code, out, _ = call("lc-compare", "--model", VACUUM, "--grid", "x2=-1:1:3,x3=-1:1:3,v=0.5:1.5:3")
    rep = json.loads(out)
    assert "max_difference" in rep and np.isfinite(rep["max_difference"])
    assert code in (0, 1)


# -- building blocks ---------------------------------------------------------------------

def test_parse_grid_spec():
    spec = parse_grid_spec("x2=-1:1:17, v=0.5:1.5, x1=0, random=200")
    assert spec["random"] == 200
    assert (spec["x2"].lo, spec["x2"].hi, spec["x2"].points) == (-1.0, 1.0, 17)
    assert spec["v"].points == 17 and spec["x1"].fixed
    for bad in ("x2", "x2=a:b", "x2=0:1:2:3", "random=-1", "=1"):
        with pytest.raises(InputError):
            parse_grid_spec(bad)


def test_grid_defaults_fix_unmentioned_coordinates():
    g = build_grid(five_d_chart(), {"axes": {"v": {"range": [0, 1], "points": 4}}})
    env = g.env({})
    assert len(env["v"]) == 4 and np.all(env["x2"] == 0.0)


def test_tolerance_overrides():
    assert parse_tolerance_overrides(["residual=1e-3", "lc=2"]) == {"residual": 1e-3, "lc": 2.0}
    for bad in (["residual"], ["residual=x"], ["nope=1"]):
        with pytest.raises(InputError):
            parse_tolerance_overrides(bad)


def test_canonical_float_formatting():
    assert format_float(-0.0) == format_float(0.0)
    assert float(format_float(0.1)) == 0.1
    assert float(format_float(1 / 3)) == 1 / 3
    assert canonical_json({"b": 1, "a": [0.5]}) == canonical_json({"a": [0.5], "b": 1})


def test_model_chart_and_digest(tmp_path):
    m = load_model(VACUUM)
    assert m.chart.coords == ("x1", "x2", "x3", "v", "y5")
    assert len(m.digest) == 64
    assert load_model(json.loads(VACUUM.read_text())).digest == m.digest
