import json
import math
import re
import subprocess
import sys

import pytest

from jitcluster.cli import (
    BITFLIP_HEADER,
    RESERVOIR_HEADER,
    THRESHOLD_HEADER,
    load_config,
    parse_and_run,
)

FLOAT_17G = re.compile(r"^-?\d(\.\d+)?(e[+-]\d+)?$|^-?\d+(\.\d+)?$|^nan$")


def run(*argv):
    return parse_and_run([str(a) for a in argv])


def read_csv(path):
    text = path.read_bytes().decode()
    assert "\r" not in text and text.endswith("\n")
    lines = text.splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_threshold_csv(tmp_path):
    out = tmp_path / "fig2_dh.csv"
    code = run("threshold", "--procedure", "dh", "--alpha", 10, "--dim", 1,
               "--p-min", 0.05, "--p-max", 1, "--p-steps", 96, "--out", out)
    assert code == 0
    header, rows = read_csv(out)
    assert tuple(header) == THRESHOLD_HEADER
    assert len(rows) == 96
    assert all(FLOAT_17G.match(cell) for row in rows for cell in row[:5])
    first = [float(x) for x in rows[0][:5]]
    assert first[0] == 0.05 and first[2] == pytest.approx(20)
    assert float(format(first[1], ".17g")) == first[1]
    # 17 significant digits round-trip exactly.
    assert any(len(cell.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) == 17 for cell in rows[1][:5])


def test_threshold_unsupported_rows_flagged(tmp_path):
    out = tmp_path / "t.csv"
    assert run("threshold", "--procedure", "fusion2", "--dim", 2, "--p-steps", 3, "--out", out) == 0
    _, rows = read_csv(out)
    assert [r[5] for r in rows] == ["unsupported"] * 3
    assert rows[0][1] == "nan"


def test_threshold_json(tmp_path):
    out = tmp_path / "t.json"
    assert run("threshold", "--procedure", "bc", "--p-steps", 2, "--format", "json", "--out", out) == 0
    payload = json.loads(out.read_text())
    assert payload["rows"][-1]["p"] == 1.0
    assert payload["rows"][-1]["t2_over_dt"] == pytest.approx(41.4597, abs=1e-3)


def test_bitflip_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert run("bitflip", "--alpha", "10,100", "--p-min", 0.1, "--p-max", 1, "--p-steps", 10, "--out", out) == 0
    header, rows = read_csv(out)
    assert tuple(header) == BITFLIP_HEADER
    assert len(rows) == 20
    assert float(rows[9][2]) == pytest.approx((0.5 * (1 + math.exp(-0.1))) ** 2)


def test_graph_demo_x(capsys):
    assert run("graph", "demo-x", "--length", 5, "--pos", 3) == 0
    dot = capsys.readouterr().out
    found = {frozenset(map(int, m)) for m in re.findall(r"(\d+) -- (\d+)", dot)}
    assert found == {frozenset({1, 4}), frozenset({2, 4}), frozenset({4, 5})}


def test_graph_vertical_json(tmp_path):
    out = tmp_path / "g.json"
    assert run("graph", "vertical", "--procedure", "bc", "--format", "json", "--out", out) == 0
    data = json.loads(out.read_text())
    assert [v["id"] for v in data["vertices"]] == sorted(v["id"] for v in data["vertices"])


def test_graph_rejects_fusion(tmp_path):
    assert run("graph", "vertical", "--procedure", "fusion1", "--out", tmp_path / "g.dot") == 2


def test_walk_json(tmp_path):
    out = tmp_path / "w.json"
    assert run("walk", "--procedure", "dh", "--p", 0.5, "--trials", 200, "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["exact_step_variance"] == pytest.approx(4)
    assert data["stats"]["trials"] == 200


def test_walk_csv_underflow(tmp_path):
    out = tmp_path / "u.csv"
    assert run("walk", "--format", "csv", "--beta-grid", "0,1,2", "--trials", 500, "--out", out) == 0
    header, rows = read_csv(out)
    assert header == ["beta_multiplier", "underflow_fraction"]
    assert float(rows[0][1]) == 1.0


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nprocedure = bc\np-steps = 4\nalpha = 100  # strict\n")
    assert load_config(cfg) == {"procedure": "bc", "p_steps": "4", "alpha": "100"}
    out = tmp_path / "a.csv"
    assert run("threshold", "--config", cfg, "--p-steps", 2, "--out", out) == 0
    _, rows = read_csv(out)
    assert len(rows) == 2
    # broker-client at p=1, alpha=100: tau=1, buffer sqrt(2 ln 100), m=1.
    assert float(rows[-1][1]) == pytest.approx(100 * (2 + math.sqrt(2 * math.log(100))))


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("procedure = dh\nbogus_key = 3\n")
    assert run("threshold", "--config", cfg) == 2
    assert "bogus_key" in capsys.readouterr().err


def test_config_bad_value(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("p_steps = many\n")
    assert run("threshold", "--config", cfg) == 2
    assert "p_steps" in capsys.readouterr().err


def test_invalid_parameter_exit_2():
    assert run("threshold", "--alpha", 0.5) == 2
    assert run("walk", "--workers", 0) == 2


def test_capacity_exit_3(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run("reservoir", "--procedure", "dh", "--tau-list", "1,2", "--trials", 100, "--out", out) == 3
    assert "tau=2" in capsys.readouterr().err
    _, rows = read_csv(out)
    assert rows[1][2] == "nan"


def test_reservoir_csv_and_summary(tmp_path):
    out = tmp_path / "r.csv"
    assert run("reservoir", "--procedure", "bc", "--tau-list", "2,3,4", "--trials", 300,
               "--seed", 42, "--out", out) == 0
    header, rows = read_csv(out)
    assert tuple(header) == RESERVOIR_HEADER
    assert [int(r[0]) for r in rows] == [2, 3, 4]
    summary = json.loads((tmp_path / "r.json").read_text())
    assert {"gamma", "intercept", "r_squared"} <= summary.keys()
    assert summary["gamma"] > 0


def test_reservoir_workers_byte_identical(tmp_path):
    args = ["reservoir", "--procedure", "bc", "--tau-list", "2,3,4", "--trials", 300, "--seed", 42]
    assert run(*args, "--out", tmp_path / "serial.csv") == 0
    assert run(*args, "--workers", 8, "--out", tmp_path / "par.csv") == 0
    assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "par.csv").read_bytes()
    assert (tmp_path / "serial.json").read_bytes() == (tmp_path / "par.json").read_bytes()


def test_walk_workers_byte_identical(tmp_path):
    args = ["walk", "--format", "csv", "--trials", 3000, "--seed", 9]
    assert run(*args, "--out", tmp_path / "a.csv") == 0
    assert run(*args, "--workers", 8, "--out", tmp_path / "b.csv") == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_plot_writes_image(tmp_path):
    img = tmp_path / "t2.png"
    assert run("threshold", "--p-steps", 5, "--out", tmp_path / "t.csv", "--plot", img) == 0
    assert img.read_bytes()[:4] == b"\x89PNG"
    first = img.read_bytes()
    assert run("threshold", "--p-steps", 5, "--out", tmp_path / "t.csv", "--plot", img) == 0
    assert img.read_bytes() == first


def test_figures_without_reservoir(tmp_path):
    assert run("figures", "--outdir", tmp_path, "--p-steps", 8, "--skip-reservoir") == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"fig2_dh.csv", "fig4_bc.csv", "fig5_dh.csv", "fig6_bitflip.csv", "fig2.png", "fig6.png"} <= names


def test_console_script_no_color(tmp_path):
    out = tmp_path / "t.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "jitcluster.cli", "threshold", "--p-steps", "2", "--out", str(out)],
        capture_output=True, text=True, env={"NO_COLOR": "1", "PATH": ""},
    )
    assert proc.returncode == 0
    assert "\033[" not in proc.stderr
    assert proc.stderr.count("\n") == 1
