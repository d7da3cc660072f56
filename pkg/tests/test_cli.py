"""Command-line surface: exit codes, formats, determinism."""

from __future__ import annotations

import json

import pytest

from symdyn import cli


def run_to_file(tmp_path, name, argv):
    out = tmp_path / name
    code = cli.run(argv + ["--out", str(out)])
    return code, out.read_text()


def test_graph_ball_csv(tmp_path):
    code, text = run_to_file(
        tmp_path, "ball.csv",
        ["graph-ball", "--family", "cayley_zd", "--D", "2",
         "--center", "0,0", "--radius", "2"],
    )
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0].startswith("# config:")
    assert lines[2] == "r,size"
    assert lines[-1] == "2,13"


def test_graph_dim_json(tmp_path):
    code, text = run_to_file(
        tmp_path, "dim.json",
        ["graph-dim", "--family", "cayley_zd", "--D", "2", "--vertex", "0,0",
         "--rmin", "16", "--rmax", "32", "--format", "json"],
    )
    assert code == 0
    payload = json.loads(text)
    assert 1.8 <= payload["summary"]["fit_slope"] <= 2.1
    assert payload["config"]["rmin"] == 16


def test_graph_speed(tmp_path):
    code, text = run_to_file(
        tmp_path, "speed.json",
        ["graph-speed", "--family", "cayley_zd", "--D", "2", "--vertex", "0,0",
         "--shift", "1,0", "--nmax", "8", "--format", "json"],
    )
    assert code == 0
    assert json.loads(text)["summary"]["inf_proxy"] == 1.0


def test_sys_propagation(tmp_path):
    code, text = run_to_file(
        tmp_path, "rho.csv",
        ["sys-propagation", "--system", "counterexample", "--vertex", "0",
         "--T", "6"],
    )
    assert code == 0
    assert text.strip().splitlines()[-1] == "6,21"


def test_sys_panorama_odometer(tmp_path):
    code, text = run_to_file(
        tmp_path, "pan.json",
        ["sys-panorama", "--system", "odometer", "--m", "2", "--window", "0",
         "--T", "10", "--format", "json"],
    )
    assert code == 0
    payload = json.loads(text)
    assert all(row["layer"] == [0] for row in payload["rows"])


def test_sys_equicontinuity(tmp_path):
    code, text = run_to_file(
        tmp_path, "env.json",
        ["sys-equicontinuity", "--system", "odometer", "--m", "2",
         "--window", "0;1", "--tprobe", "12", "--rcap", "6",
         "--format", "json"],
    )
    assert code == 0
    assert json.loads(text)["summary"]["certified"] is True


def test_sys_odometer_chain(tmp_path):
    code, text = run_to_file(
        tmp_path, "chain.json",
        ["sys-odometer-chain", "--system", "odometer", "--m", "2",
         "--windows", "0|0;1", "--horizon", "8", "--format", "json"],
    )
    assert code == 0
    payload = json.loads(text)
    assert [r["trajectories"] for r in payload["rows"]] == [2, 4]


def test_entropy_ball(tmp_path):
    code, text = run_to_file(
        tmp_path, "ent.json",
        ["entropy-ball", "--system", "counterexample", "--vertex", "0",
         "--rmin", "2", "--rmax", "10", "--format", "json"],
    )
    assert code == 0
    payload = json.loads(text)
    assert all(1.0 < row["ratio"] <= 1.6 for row in payload["rows"])


def test_entropy_tau(tmp_path):
    code, text = run_to_file(
        tmp_path, "tau.json",
        ["entropy-tau", "--system", "full_shift", "--alphabet", "2",
         "--base", "0", "--shift", "1", "--nmax", "10", "--format", "json"],
    )
    assert code == 0
    payload = json.loads(text)
    assert payload["summary"]["final_value"] == pytest.approx(1.1)


def test_cex_roundtrip_passes(tmp_path):
    code, text = run_to_file(
        tmp_path, "rt.json",
        ["cex-roundtrip", "--J", "3", "--trials", "20", "--seed", "1",
         "--format", "json"],
    )
    assert code == 0
    assert json.loads(text)["summary"]["passed"] is True


def test_cex_propagation(tmp_path):
    code, text = run_to_file(
        tmp_path, "prop.csv", ["cex-propagation", "--T", "12"]
    )
    assert code == 0
    assert "lower_bound_ok\": true" in text


def test_cex_roundtrip_trace_dump(tmp_path):
    trace_file = tmp_path / "trace.csv"
    code, _ = run_to_file(
        tmp_path, "rt2.json",
        ["cex-roundtrip", "--J", "2", "--trials", "1", "--seed", "4",
         "--dump-trace", str(trace_file), "--format", "json"],
    )
    assert code == 0
    lines = trace_file.read_text().strip().splitlines()
    assert lines[1] == "t,a,b"
    assert len(lines) == 2 + 7  # horizon m_2 = 6 gives observations 0..6
    assert all(len(line.split(",")) == 3 for line in lines[2:])


def test_metric_dim(tmp_path):
    code, text = run_to_file(
        tmp_path, "mdim.json",
        ["metric-dim", "--system", "full_shift", "--alphabet", "2",
         "--estuary", "0", "--lam", "2", "--eps-min-pow", "8",
         "--eps-max-pow", "32", "--eps-step", "2", "--format", "json"],
    )
    assert code == 0
    payload = json.loads(text)
    assert 0.9 <= payload["summary"]["lower_slope"] <= 1.1


def test_metric_lipschitz(tmp_path):
    code, text = run_to_file(
        tmp_path, "lip.json",
        ["metric-lipschitz", "--system", "full_shift", "--alphabet", "2",
         "--estuary", "0", "--lam", "2", "--samples", "200", "--seed", "3",
         "--format", "json"],
    )
    assert code == 0
    assert json.loads(text)["summary"]["within_lambda"] is True


def test_holder_check_pass_and_fail(tmp_path):
    ok, _ = run_to_file(
        tmp_path, "h1.json",
        ["holder-check", "--system", "full_shift", "--alphabet", "2",
         "--estuary", "0", "--lam", "2", "--lam2", "4", "--eta", "2",
         "--samples", "100", "--format", "json"],
    )
    assert ok == 0
    bad, text = run_to_file(
        tmp_path, "h2.json",
        ["holder-check", "--system", "full_shift", "--alphabet", "2",
         "--estuary", "0", "--lam", "2", "--lam2", "4", "--eta", "3",
         "--samples", "100", "--format", "json"],
    )
    assert bad == 1
    assert json.loads(text)["summary"]["violations"] > 0


def test_usage_error_exit_code():
    assert cli.run(["graph-ball", "--family", "cayley_zd"]) == 2  # no center
    assert cli.run(["no-such-command"]) == 2


def test_config_error_exit_code(tmp_path):
    code = cli.run(
        ["graph-ball", "--family", "nope", "--center", "0", "--radius", "2",
         "--out", str(tmp_path / "x.csv")]
    )
    assert code == 2


def test_byte_identical_reruns(tmp_path):
    argv = ["cex-roundtrip", "--J", "3", "--trials", "30", "--seed", "9",
            "--format", "json"]
    _, first = run_to_file(tmp_path, "a.json", argv)
    _, second = run_to_file(tmp_path, "b.json", argv)
    assert first == second
    argv2 = ["graph-dim", "--family", "cayley_zd", "--D", "2", "--vertex",
             "0,0", "--rmin", "8", "--rmax", "24"]
    _, c1 = run_to_file(tmp_path, "c.csv", argv2)
    _, c2 = run_to_file(tmp_path, "d.csv", argv2)
    assert c1 == c2


def test_metric_file_loading(tmp_path):
    f = tmp_path / "metric.json"
    f.write_text(json.dumps({"estuary": [0], "lambda": 2, "scheme": "finite",
                             "coeffs": [1.0]}))
    code, text = run_to_file(
        tmp_path, "md.json",
        ["metric-dim", "--system", "full_shift", "--alphabet", "2",
         "--metric-file", str(f), "--eps-min-pow", "8", "--eps-max-pow", "24",
         "--eps-step", "4", "--format", "json"],
    )
    assert code == 0
    assert 0.8 <= json.loads(text)["summary"]["lower_slope"] <= 1.2


def test_graph_file_loading(tmp_path):
    f = tmp_path / "graph.json"
    f.write_text(json.dumps({"edges": [[0, 1], [1, 2], [2, 0]]}))
    code, text = run_to_file(
        tmp_path, "gb.json",
        ["graph-ball", "--graph-file", str(f), "--center", "0", "--radius", "3",
         "--format", "json"],
    )
    assert code == 0
    assert [row["size"] for row in json.loads(text)["rows"]] == [1, 2, 3, 3]


def test_system_file_loading(tmp_path):
    desc = {
        "alphabet": 2,
        "graph": {"edges": [[1, 0], [0, 1]]},
        "rules": [
            {"vertex": 0, "inputs": [1], "table": [1, 0]},
            {"vertex": 1, "inputs": [0], "table": [0, 1]},
        ],
    }
    f = tmp_path / "sys.json"
    f.write_text(json.dumps(desc))
    code, text = run_to_file(
        tmp_path, "p.json",
        ["sys-propagation", "--system-file", str(f), "--vertex", "0",
         "--T", "4", "--format", "json"],
    )
    assert code == 0
    assert [row["rho"] for row in json.loads(text)["rows"]] == [1, 2, 2, 2, 2]
