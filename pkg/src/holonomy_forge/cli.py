"""``holonomy-forge``: run verification suites on named fixtures and write a JSON report.

Exit status is 0 when every check passes, 1 when any check fails and 2 on
configuration or fixture errors.
"""
from __future__ import annotations

import argparse
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FixtureError, GeometryError, UnknownId
from .fixtures import REGISTRY, build_fixture, list_fixtures
from .suites import CHECKS, SUITES, CheckResult, SuiteContext, describe, run_suite

THREADS_ENV = "HOLONOMY_FORGE_THREADS"
GRID_KEYS = {"points": 50, "codazzi_samples": 500}


@dataclass
class SuiteConfig:
    fixture: str = "flat-torus"
    fixture_params: dict = field(default_factory=dict)
    suites: list = field(default_factory=lambda: list(SUITES))
    tolerances: dict = field(default_factory=dict)
    global_tol: float | None = None
    seed: int = 0
    grid: dict = field(default_factory=lambda: dict(GRID_KEYS))
    output: str | None = None


def _positive_float(key: str, value: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"{key}: {value!r} is not a number") from None
    if not x > 0 or not math.isfinite(x):
        raise ConfigError(f"{key}: tolerance must be positive and finite")
    return x


def _int(key: str, value: str, minimum: int = 0) -> int:
    try:
        x = int(value)
    except ValueError:
        raise ConfigError(f"{key}: {value!r} is not an integer") from None
    if x < minimum:
        raise ConfigError(f"{key}: must be at least {minimum}")
    return x


def _suite_list(value: str) -> list:
    names = [s.strip() for s in value.split(",") if s.strip()]
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; known: {', '.join(SUITES)}")
    if not names:
        raise ConfigError("suites: empty list")
    return names


def parse_config(text: str, cfg: SuiteConfig | None = None) -> SuiteConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment, dotted keys select sections."""
    cfg = cfg or SuiteConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        section, _, sub = key.partition(".")
        if key in ("fixture", "fixture.name"):
            cfg.fixture = value
        elif section == "fixture" and sub:
            cfg.fixture_params[sub] = value
        elif key == "suites":
            cfg.suites = _suite_list(value)
        elif key == "seed":
            cfg.seed = _int(key, value)
        elif key == "output":
            cfg.output = value
        elif key in ("tolerances.default", "tol"):
            cfg.global_tol = _positive_float(key, value)
        elif section == "tolerances" and sub:
            if sub not in CHECKS:
                raise ConfigError(f"line {lineno}: unknown check {sub!r}")
            cfg.tolerances[sub] = _positive_float(key, value)
        elif section == "grid" and sub in GRID_KEYS:
            cfg.grid[sub] = _int(key, value, minimum=1)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    return cfg


def _coerce_params(name: str, params: dict) -> dict:
    spec = REGISTRY.get(name)
    if spec is None:
        raise FixtureError(f"unknown fixture {name!r}; known: {', '.join(list_fixtures())}")
    out = {}
    for k, v in params.items():
        if k not in spec.params:
            raise FixtureError(f"fixture {name!r} has no parameter {k!r}")
        default = spec.params[k]
        try:
            out[k] = type(default)(v) if not isinstance(default, str) else str(v)
        except ValueError:
            raise FixtureError(f"fixture parameter {k}: cannot read {v!r}") from None
    return out


def thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return max(1, min(4, os.cpu_count() or 1))
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer")
    return n


# ---------------------------------------------------------------------------
# report serialisation


def _num(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.5e}"


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: insertion key order, floats as 6-digit scientific notation."""
    import json

    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, str, bool)) and not isinstance(v, dict) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if obj is None:
        return "null"
    return _num(obj)


def _check_entry(r: CheckResult) -> dict:
    return {
        "check_id": r.check_id,
        "paper_anchor": r.anchor,
        "residual": r.residual,
        "tolerance": r.tolerance,
        "relation": r.relation,
        "pass": r.passed,
    }


def _run_one(index: int, name: str, fx, cfg: SuiteConfig):
    ctx = SuiteContext(seed=cfg.seed, points=cfg.grid["points"], codazzi_samples=cfg.grid["codazzi_samples"],
                       tolerances=cfg.tolerances, global_tol=cfg.global_tol, suite_index=index)
    t0 = time.perf_counter()
    try:
        results = run_suite(name, fx, ctx)
        error = None
    except (GeometryError, ValueError, np.linalg.LinAlgError) as exc:
        results, error = [], f"{type(exc).__name__}: {exc}"
    return results, error, time.perf_counter() - t0


def run(cfg: SuiteConfig) -> tuple:
    """Build the fixture, run the suites and return ``(report, exit_code)``."""
    params = _coerce_params(cfg.fixture, cfg.fixture_params)
    fx = build_fixture(cfg.fixture, **params)
    workers = min(thread_cap(), len(cfg.suites))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_one, SUITES.index(s), s, fx, cfg) for s in cfg.suites]
        outcomes = [f.result() for f in futures]

    suites, timings = {}, {}
    n_checks = n_pass = 0
    skipped, errored = [], []
    for name, (results, error, dt) in zip(cfg.suites, outcomes):
        timings[name] = round(dt, 3)
        if error is not None:
            status = "error"
            errored.append(name)
        elif not results:
            status = "skipped"
            skipped.append(name)
        else:
            status = "ran"
        entry = {"status": status, "checks": [_check_entry(r) for r in results]}
        if error is not None:
            entry["error"] = error
        suites[name] = entry
        n_checks += len(results)
        n_pass += sum(r.passed for r in results)
    ok = n_pass == n_checks and not errored
    report = {
        "fixture": {"name": fx.name, "params": fx.params},
        "suites": suites,
        "summary": {
            "checks": n_checks,
            "passed": n_pass,
            "failed": n_checks - n_pass,
            "skipped_suites": skipped,
            "errored_suites": errored,
            "pass": ok,
        },
        "environment": {
            "version": __version__,
            "seed": cfg.seed,
            "grid": dict(cfg.grid),
            "tolerance_overrides": dict(sorted(cfg.tolerances.items())),
            "global_tolerance": cfg.global_tol,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "timings": timings,
    }
    return report, 0 if ok else 1


def strip_timings(report_text: str) -> str:
    """Report text without the trailing timings block, for byte comparisons."""
    cut = report_text.rfind('"timings"')
    return report_text if cut < 0 else report_text[:cut]


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="holonomy-forge", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run verification suites")
    r.add_argument("--config", help="flat key = value config file")
    r.add_argument("--fixture", help="fixture name (overrides the config)")
    r.add_argument("--seed", type=int)
    r.add_argument("--tol", type=float, help="tolerance for every residual check")
    r.add_argument("--out", help="report path; stdout when omitted")
    r.add_argument("--suite", action="append", help="suite to run (repeatable)")
    sub.add_parser("list", help="list fixtures, suites and checks")
    d = sub.add_parser("describe", help="show what a check verifies")
    d.add_argument("check_id")
    return ap


def _print_list(out) -> None:
    print("fixtures:", file=out)
    for name in list_fixtures():
        spec = REGISTRY[name]
        params = ", ".join(f"{k}={v}" for k, v in spec.params.items())
        print(f"  {name:18s} {spec.summary}" + (f"  [{params}]" if params else ""), file=out)
    print("suites:", file=out)
    for s in SUITES:
        ids = [c.check_id for c in CHECKS.values() if c.suite == s]
        print(f"  {s:15s} {', '.join(ids)}", file=out)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out = sys.stdout
    if args.verb == "list":
        _print_list(out)
        return 0
    if args.verb == "describe":
        try:
            print(describe(args.check_id), file=out)
        except UnknownId:
            print(f"unknown check id {args.check_id!r}", file=sys.stderr)
            return 2
        return 0
    try:
        cfg = SuiteConfig()
        if args.config:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            cfg = parse_config(text, cfg)
        if args.fixture:
            cfg.fixture = args.fixture
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative")
            cfg.seed = args.seed
        if args.tol is not None:
            cfg.global_tol = _positive_float("--tol", str(args.tol))
        if args.suite:
            cfg.suites = _suite_list(",".join(args.suite))
        if args.out:
            cfg.output = args.out
        report, code = run(cfg)
    except (ConfigError, FixtureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = to_json(report) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    for name, entry in report["suites"].items():
        for c in entry["checks"]:
            mark = "PASS" if c["pass"] else "FAIL"
            print(f"{mark} {name}/{c['check_id']}: {_num(c['residual'])} {c['relation']} {_num(c['tolerance'])}",
                  file=sys.stderr)
        if entry["status"] != "ran":
            print(f"{entry['status'].upper()} {name}" + (f": {entry.get('error')}" if "error" in entry else ""),
                  file=sys.stderr)
    s = report["summary"]
    print(f"{s['passed']}/{s['checks']} checks passed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
