"""Acceptance criteria, each run through the suite runner behind the CLI.

Every test prints a single ``PASS``/``FAIL`` line with the worst offending
check before asserting, so ``pytest -v -s tests/test_acceptance.py`` (or the
captured output of a plain run) reads as a scorecard.
"""
import functools
import subprocess
import sys
import time

import pytest

from holonomy_forge import cli


@functools.lru_cache(maxsize=None)
def run_fixture(fixture, suites, params=(), points=50, codazzi_samples=500, seed=0):
    cfg = cli.SuiteConfig(fixture=fixture, fixture_params=dict(params), suites=list(suites), seed=seed,
                          grid={"points": points, "codazzi_samples": codazzi_samples})
    t0 = time.perf_counter()
    report, _ = cli.run(cfg)
    return report, time.perf_counter() - t0


def checks_of(report, suite):
    entry = report["suites"][suite]
    assert entry["status"] == "ran", entry.get("error", entry["status"])
    return {c["check_id"]: c for c in entry["checks"]}


def verdict(capsys, number, title, problems):
    line = f"criterion {number} {'PASS' if not problems else 'FAIL'}: {title}"
    if problems:
        line += " | " + "; ".join(problems)
    with capsys.disabled():
        print("\n" + line)
    assert not problems, line


def require(problems, label, checks, ids):
    for cid in ids:
        c = checks.get(cid)
        if c is None:
            problems.append(f"{label}/{cid} missing")
        elif not c["pass"]:
            problems.append(f"{label}/{cid} {c['residual']} {c['relation']} {c['tolerance']}")


def test_criterion_1_connection_oracle(capsys):
    report, dt = run_fixture("eguchi-hanson", ("connection",), (("a", "1.0"),))
    problems = []
    ch = checks_of(report, "connection")
    require(problems, "eh", ch, ["connection-table", "chart-connection"])
    if ch.get("connection-table", {}).get("tolerance") != 1e-8:
        problems.append("connection-table tolerance is not 1e-8")
    if ch.get("chart-connection", {}).get("tolerance") != 1e-5:
        problems.append("chart-connection tolerance is not 1e-5")
    if dt > 10:
        problems.append(f"runtime {dt:.1f}s > 10s")
    verdict(capsys, 1, f"EH connection table on 200 points ({dt:.1f}s)", problems)


def test_criterion_2_codazzi_constructions(capsys):
    problems = []
    total = 0.0
    for fiber in ("torus", "eh"):
        report, dt = run_fixture("warped", ("codazzi",), (("fiber", fiber),), codazzi_samples=500)
        total += dt
        require(problems, f"warped[{fiber}]", checks_of(report, "codazzi"),
                ["codazzi5", "codazzi6", "codazzi7", "codazzi8", "codazzi9"])
    if total > 30:
        problems.append(f"runtime {total:.1f}s > 30s")
    verdict(capsys, 2, f"H(b,0,E) over torus and EH, 500 samples ({total:.1f}s)", problems)


CYL_SUITES = ("curvature", "cylinder")


def test_criterion_3_cylinder_identities(capsys):
    problems = []
    report, _ = run_fixture("cylinder-eh", CYL_SUITES, points=50)
    if report["environment"]["grid"]["points"] < 50:
        problems.append("fewer than 50 configurations")
    first = ["P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "P10"]
    second = ["P12", "P13", "P14", "P15", "curv1", "curv2", "curv3", "item1"]
    cyl = checks_of(report, "cylinder")
    cur = checks_of(report, "curvature")
    require(problems, "cylinder-eh", cyl, first)
    require(problems, "cylinder-eh", cur, second)
    for cid in first:
        if cid in cyl and cyl[cid]["tolerance"] > 1e-6:
            problems.append(f"{cid} tolerance above 1e-6")
    for cid in second:
        if cid in cur and cur[cid]["tolerance"] > 1e-4:
            problems.append(f"{cid} tolerance above 1e-4")
    verdict(capsys, 3, "cylinder identities at 50 configurations", problems)


def test_criterion_4_flatness_equivalence(capsys):
    problems = []
    flat, _ = run_fixture("cylinder-torus", ("curvature",), points=50)
    require(problems, "cylinder-torus", checks_of(flat, "curvature"), ["cylinder-flat"])
    curved, _ = run_fixture("cylinder-eh", CYL_SUITES, points=50)
    require(problems, "cylinder-eh", checks_of(curved, "curvature"), ["nonflat-witness"])
    verdict(capsys, 4, "flat torus cylinder is flat, EH cylinder is not", problems)


HOLONOMY_CASES = [
    ("flat", (), ["holonomy-dim", "methods-agree"]),
    ("flat-torus", (), ["holonomy-dim", "methods-agree"]),
    ("hessian", (), ["holonomy-dim", "methods-agree"]),
    ("cone", (), ["holonomy-dim", "methods-agree"]),
    ("cylinder-torus", (), ["holonomy-dim", "methods-agree", "verdict"]),
    ("warped", (("fiber", "torus"),), ["holonomy-dim", "methods-agree", "rank-gap", "skew"]),
    ("eguchi-hanson", (), ["holonomy-dim", "methods-agree", "rank-gap", "skew"]),
    ("cylinder-eh", (), ["holonomy-dim", "methods-agree", "rank-gap", "skew", "P-annihilated", "P16", "verdict"]),
    ("cylinder-product", (), ["holonomy-dim", "methods-agree", "rank-gap", "skew", "verdict"]),
]


def test_criterion_5_holonomy_dimensions(capsys):
    problems = []
    total = 0.0
    for name, params, ids in HOLONOMY_CASES:
        report, dt = run_fixture(name, ("holonomy",), params)
        total += dt
        require(problems, name, checks_of(report, "holonomy"), ids)
    if total > 300:
        problems.append(f"runtime {total:.1f}s > 300s")
    verdict(capsys, 5, f"holonomy dimensions, verdicts and rank gaps ({total:.1f}s)", problems)


def test_criterion_6_spinors(capsys):
    problems = []
    report, _ = run_fixture("cylinder-torus", ("spinor",))
    ch = checks_of(report, "spinor")
    require(problems, "cylinder-torus", ch, ["killing", "norm-profile", "dirac-current", "q-zero", "lift-parallel",
                                             "lift-current", "ricci-constraint", "transfer-q"])
    expected_tol = {"killing": 1e-6, "norm-profile": 1e-5, "dirac-current": 1e-5, "q-zero": 1e-8,
                    "lift-parallel": 1e-5, "lift-current": 1e-6, "ricci-constraint": 1e-4, "transfer-q": 1e-8}
    for cid, tol in expected_tol.items():
        if cid in ch and ch[cid]["tolerance"] > tol:
            problems.append(f"{cid} tolerance above {tol:g}")
    verdict(capsys, 6, "warped Killing spinor, its lift and transfer", problems)


def test_criterion_7_eh_obstruction(capsys):
    problems = []
    report, _ = run_fixture("eguchi-hanson", ("eh-obstruction",))
    require(problems, "eguchi-hanson", checks_of(report, "eh-obstruction"),
            ["obstruction-nullity", "obstruction-stable", "obstruction-identity", "homothetic"])
    verdict(capsys, 7, "EH radial Codazzi tensors are constant multiples of Id; no homothetic field", problems)


def test_criterion_8_causality(capsys):
    problems = []
    ident, _ = run_fixture("cylinder-identity", ("causality",))
    require(problems, "cylinder-identity", checks_of(ident, "causality"),
            ["gh-closed-form", "bbc-closed-form", "finite-bounds"])
    eh, _ = run_fixture("cylinder-eh", ("causality",))
    require(problems, "cylinder-eh", checks_of(eh, "causality"), ["finite-bounds"])
    verdict(capsys, 8, "causality bounds: closed forms for H = Id, finite on EH", problems)


def _cli_report(threads, tmp_path, tag):
    out = tmp_path / f"{tag}.json"
    subprocess.run([sys.executable, "-m", "holonomy_forge.cli", "run", "--fixture", "eguchi-hanson", "--seed", "11",
                    "--out", str(out)], capture_output=True, env={"HOLONOMY_FORGE_THREADS": threads, "PATH": ""})
    return out.read_text(encoding="utf-8") if out.exists() else ""


def test_criterion_9_determinism(capsys, tmp_path):
    problems = []
    a = _cli_report("1", tmp_path, "a")
    b = _cli_report("4", tmp_path, "b")
    if not a or not b:
        problems.append("a run produced no report")
    elif cli.strip_timings(a) != cli.strip_timings(b):
        problems.append("reports differ outside the timings block")
    verdict(capsys, 9, "identical config and seed give byte-identical reports", problems)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
