import csv
import io
import json
import shutil
import subprocess

import pytest

from fcover.cli import RunConfig, UsageError, fmt_value, load_config, main, render, svg_plot

GAUSS_ARGS = ["--f", "gauss(1)", "--g", "gauss(1)", "--window", "-6", "6", "--n", "241",
              "--atoms", "-8", "8", "321"]
UNREACHABLE = ["--f", "ind_box(-1,1)", "--g", "translate(ind_box(0,1),5)", "--window", "-1", "1",
               "--n", "21", "--atoms", "-2", "2", "41"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_cover_example(tmp_path):
    out = tmp_path / "out.csv"
    assert main(["cover", *GAUSS_ARGS, "-o", str(out)]) == 0
    (row,) = read_csv(out)
    assert float(row["value_primal"]) == pytest.approx(1.0, abs=1e-4)
    assert float(row["gap"]) <= 1e-7
    assert row["status"] == "optimal" and row["n_constraints"] == "241" and row["n_atoms"] == "321"
    assert row["runtime_ms"] == "0"


def test_csv_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["cover", *GAUSS_ARGS, "-o", str(a)])
    main(["cover", *GAUSS_ARGS, "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_timing_fills_runtime(tmp_path):
    out = tmp_path / "t.csv"
    main(["cover", *GAUSS_ARGS, "--timing", "-o", str(out)])
    assert float(read_csv(out)[0]["runtime_ms"]) > 0


def test_missing_g_is_usage_error(capsys):
    assert main(["cover", "--f", "gauss(1)"]) == 1
    err = capsys.readouterr().err
    assert "--g" in err and "usage:" in err


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["cover", "--f", "gauss(", "--g", "gauss(1)"],
    ["cover", "--f", "gauss(-1)", "--g", "gauss(1)"],
    ["cover", "--f", "gauss(1)", "--g", "gauss(1)", "--window", "-1", "1"],
    ["hadwiger", "--f", "gauss(1)", "--lambdas", "0.5,1.5"],
    ["bounds", "--f", "gauss(1)", "--g", "gauss(1)", "--p", "0.5"],
    ["cover", "--f", "gauss(1)", "--g", "gauss(1)", "--format", "xml"],
])
def test_bad_invocations_exit_1(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("fcover:")


def test_infeasible_exits_2_with_status(tmp_path):
    out = tmp_path / "inf.json"
    assert main(["cover", *UNREACHABLE, "-o", str(out)]) == 2
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1 and doc["command"] == "cover"
    (row,) = doc["rows"]
    assert row["status"] == "infeasible" and row["value_primal"] == "inf"
    assert -1 <= doc["meta"]["witness"][0] <= 1


def test_json_schema(tmp_path):
    out = tmp_path / "o.json"
    assert main(["cover", *GAUSS_ARGS, "--format", "json", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"schema", "command", "meta", "rows"}
    assert set(doc["rows"][0]) == {"step", "n_constraints", "n_atoms", "value_primal", "value_dual",
                                   "gap", "lower_bound", "upper_bound", "status", "runtime_ms"}


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "cover", "f": "gauss(1)", "g": "gauss(2)", "step": 0.1}))
    c = load_config(["--config", str(cfg)])
    assert (c.command, c.f, c.g, c.step) == ("cover", "gauss(1)", "gauss(2)", 0.1)
    c = load_config(["cover", "--config", str(cfg), "--g", "gauss(1)"])
    assert c.g == "gauss(1)" and c.step == 0.1
    out = tmp_path / "o.csv"
    assert main(["cover", "--config", str(cfg), "-o", str(out)]) == 0
    assert float(read_csv(out)[0]["value_primal"]) == pytest.approx(2**0.5, abs=1e-4)


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"command": "cover", "f": "gauss(1)", "g": "gauss(1)", "colour": "red"}))
    with pytest.raises(UsageError, match="colour"):
        load_config(["--config", str(cfg)])
    assert main(["--config", str(tmp_path / "missing.json")]) == 1


def test_truncation_is_refused_unless_allowed(tmp_path, capsys):
    narrow = ["cover", "--f", "gauss(1)", "--g", "gauss(1)", "--window", "-3", "3", "--n", "61"]
    assert main(narrow) == 1
    assert "--allow-truncation" in capsys.readouterr().err
    assert main([*narrow, "--allow-truncation", "-o", str(tmp_path / "t.csv")]) == 0
    assert "warning" in capsys.readouterr().err


def test_mild_truncation_warns(tmp_path, capsys):
    assert main(["cover", *GAUSS_ARGS, "-o", str(tmp_path / "o.csv")]) == 0
    assert "warning" in capsys.readouterr().err


def test_node_cap_is_an_error(monkeypatch, capsys):
    monkeypatch.setenv("FCOVER_MAX_NODES", "100")
    assert main(["cover", *GAUSS_ARGS]) == 1
    assert "FCOVER_MAX_NODES" in capsys.readouterr().err


def test_hadwiger_example(tmp_path):
    out, plot = tmp_path / "scan.csv", tmp_path / "scan.svg"
    assert main(["hadwiger", "--f", "gauss(1)", "--lambdas", "0.8,0.9,0.95", "--plot", str(plot),
                 "-o", str(out)]) == 0
    rows = read_csv(out)
    assert [r["lambda"] for r in rows] == ["0.80000000000000004", "0.90000000000000002", "0.94999999999999996"]
    assert all(float(r["value"]) <= 2.03 for r in rows)
    svg = plot.read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 3 and "<!-- fcover" in svg


def test_svg_is_stable():
    s = [("a", [0.0, 1.0], [1.0, 2.0])]
    assert svg_plot(s, "x", "y") == svg_plot(s, "x", "y")
    assert "<polyline" in svg_plot(s, "x", "y")


@pytest.mark.parametrize("argv,key", [
    (["separate", "--f", "gauss(1)", "--g", "gauss(1)", "--step", "0.1"], "value_dual"),
    (["bounds", "--f", "gauss(1)", "--g", "gauss(1)", "--step", "0.05", "--p", "2,3"], "bound"),
    (["transform", "--f", "gauss(1)", "--step", "0.1"], "f_dual"),
    (["konig-milman", "--f", "gauss(1)", "--g", "gauss(2)", "--reciprocity"], "reciprocity_error"),
    (["duality", "--f", "ind_box(0,2)", "--g", "ind_box(0,1)", "--step", "0.05", "--levels", "2"], "kind"),
    (["mposition", "--f", "gauss(4)"], "constant_estimate"),
    (["facts", "--trials", "3", "--seed", "2"], "fact"),
])
def test_other_commands(argv, key, tmp_path):
    out = tmp_path / "o.csv"
    assert main([*argv, "-o", str(out)]) == 0
    rows = read_csv(out)
    assert rows and key in rows[0]


def test_bounds_rows(tmp_path):
    out = tmp_path / "b.csv"
    main(["bounds", "--f", "gauss(1)", "--g", "gauss(1)", "--step", "0.05", "--p", "2", "-o", str(out)])
    vals = {r["bound"]: float(r["value"]) for r in read_csv(out)}
    assert vals["lower_ratio"] == pytest.approx(1.0, abs=1e-9)
    assert vals["upper_p2"] == pytest.approx(2.0, abs=1e-3)


def test_render_and_fmt():
    assert fmt_value(0.1) == "0.10000000000000001"
    assert fmt_value(float("inf")) == "inf" and fmt_value(True) == "true" and fmt_value(3) == "3"
    text = render([{"a": 1, "b": 2.5}, {"a": 2}], {}, RunConfig(command="cover"))
    assert list(csv.reader(io.StringIO(text))) == [["a", "b"], ["1", "2.5"], ["2", ""]]


@pytest.mark.skipif(shutil.which("fcover") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["fcover", "cover", "--f", "gauss(1)"], capture_output=True, text=True)
    assert r.returncode == 1 and "usage" in r.stderr
    r = subprocess.run(["fcover", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("fcover")
