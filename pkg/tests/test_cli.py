import json
import subprocess
import sys

import pytest

from holonomy_forge import cli
from holonomy_forge.errors import ConfigError


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_list_and_describe(capsys):
    code, out, _ = run_cli(capsys, "list")
    assert code == 0
    assert "eguchi-hanson" in out and "connection-table" in out
    code, out, _ = run_cli(capsys, "describe", "rank-gap")
    assert code == 0 and "at least" in out
    code, _, err = run_cli(capsys, "describe", "no-such-check")
    assert code == 2 and "unknown" in err


def test_run_flat_passes(capsys, tmp_path):
    out_path = tmp_path / "r.json"
    code, out, err = run_cli(capsys, "run", "--fixture", "flat", "--suite", "connection", "--suite", "causality",
                             "--out", str(out_path))
    assert code == 0 and out == ""
    rep = json.loads(out_path.read_text())
    assert rep["summary"]["pass"] is True
    assert rep["suites"]["connection"]["status"] == "ran"
    # no cylinder, so the causality suite does not apply
    assert rep["suites"]["causality"]["status"] == "skipped"
    assert rep["summary"]["skipped_suites"] == ["causality"]
    assert "PASS connection/" in err


def test_corrupted_connection_table_fails(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("fixture = eguchi-hanson\nfixture.gamma_shift = 1e-3\nsuites = connection\ngrid.points = 20\n")
    code, out, err = run_cli(capsys, "run", "--config", str(cfg))
    assert code == 1
    rep = json.loads(out)
    failed = [c["check_id"] for c in rep["suites"]["connection"]["checks"] if not c["pass"]]
    assert "connection-table" in failed
    assert "FAIL connection/connection-table" in err


@pytest.mark.parametrize("argv", [
    ["run", "--fixture", "no-such"],
    ["run", "--fixture", "flat", "--suite", "bogus"],
    ["run", "--fixture", "flat", "--tol", "-1"],
    ["run", "--fixture", "flat", "--seed", "-3"],
    ["run", "--config", "/nonexistent/cfg"],
])
def test_configuration_errors_exit_2(capsys, argv):
    code, _, err = run_cli(capsys, *argv)
    assert code == 2 and "error" in err


def test_parse_config():
    cfg = cli.parse_config("""
        # comment
        fixture = warped
        fixture.fiber = torus
        suites = connection, codazzi
        seed = 7
        tolerances.default = 1e-3
        tolerances.rank-gap = 5
        grid.points = 10
    """)
    assert cfg.fixture == "warped" and cfg.fixture_params == {"fiber": "torus"}
    assert cfg.suites == ["connection", "codazzi"] and cfg.seed == 7
    assert cfg.global_tol == 1e-3 and cfg.tolerances == {"rank-gap": 5.0}
    assert cfg.grid["points"] == 10
    for bad in ["nonsense", "colour = red", "tolerances.nope = 1", "grid.points = 0", "seed = x", "suites = ,"]:
        with pytest.raises(ConfigError):
            cli.parse_config(bad)


def test_global_tolerance_spares_lower_bounds():
    from holonomy_forge.suites import SuiteContext

    ctx = SuiteContext(0, global_tol=1e3)
    assert ctx.result("rank-gap", 11.0).tolerance == 10.0
    assert ctx.result("connection-table", 1.0).tolerance == 1e3
    ctx = SuiteContext(0, tolerances={"connection-table": 1e-2}, global_tol=1e3)
    assert ctx.result("connection-table", 1.0).tolerance == 1e-2


def test_thread_cap(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "2")
    assert cli.thread_cap() == 2
    monkeypatch.setenv(cli.THREADS_ENV, "0")
    with pytest.raises(ConfigError):
        cli.thread_cap()
    monkeypatch.delenv(cli.THREADS_ENV)
    assert 1 <= cli.thread_cap() <= 4


def test_json_writer_is_deterministic():
    obj = {"b": [1.0, float("nan"), float("inf")], "a": {"x": True, "y": None, "z": "s"}}
    text = cli.to_json(obj)
    assert text == cli.to_json(obj)
    back = json.loads(text)
    assert list(back) == ["b", "a"]
    assert back["b"] == [1.0, "nan", "inf"]


def test_reports_are_byte_identical_apart_from_timings(tmp_path):
    paths = []
    for k, threads in enumerate(["1", "3"]):
        p = tmp_path / f"r{k}.json"
        subprocess.run([sys.executable, "-m", "holonomy_forge.cli", "run", "--fixture", "eguchi-hanson",
                        "--suite", "connection", "--suite", "curvature", "--suite", "eh-obstruction",
                        "--seed", "3", "--out", str(p)],
                       check=True, capture_output=True, env={"HOLONOMY_FORGE_THREADS": threads, "PATH": ""})
        paths.append(p.read_text())
    assert cli.strip_timings(paths[0]) == cli.strip_timings(paths[1])
    assert '"timings"' in paths[0]
