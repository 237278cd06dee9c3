"""Command line entry point: ``minmove {certify,search,run,trace,tables}``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .coefficients import GammaError, certify, load_scheme
from .harness import (
    ConvergenceError,
    RunConfig,
    load_tables,
    compare,
    run_convergence,
    run_energy_trace,
)
from .problems import PROBLEMS
from .search import SearchConfig, find_scheme

__all__ = ["main", "cli_main"]

SUITES = {
    "ode": ("c3", "c6"),
    "heat": ("h3", "h6"),
    "ac1d": ("twms3", "twms6"),
    "pde2d": ("acms32d", "acms62d", "chms32d", "chms62d"),
}
SUITES["all"] = tuple(t for s in ("ode", "heat", "ac1d", "pde2d") for t in SUITES[s])

# exit codes
OK, VIOLATION, USAGE = 0, 1, 2


def _emit(text: str, out) -> None:
    out.write(text if text.endswith("\n") else text + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="minmove", description="Multi-stage minimizing movements for gradient flows.")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default json)")
    # also accepted after the subcommand
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", parents=[fmt], help="exactly check stability and order of a scheme")
    c.add_argument("--scheme", required=True, help="builtin:NAME, a built-in name, or a JSON scheme file")
    c.add_argument("--order", type=int, choices=(1, 2, 3), required=True)

    s = sub.add_parser("search", parents=[fmt], help="search for a stable scheme of a given order")
    s.add_argument("--stages", type=int, required=True)
    s.add_argument("--order", type=int, choices=(1, 2, 3), required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps", type=float, default=1e-2, help="stability margin on the float diagonal")
    s.add_argument("--starts", type=int, default=12, help="number of random starts")

    for name, helptext in (("run", "convergence study"), ("trace", "per-step energy trace")):
        r = sub.add_parser(name, parents=[fmt], help=helptext)
        r.add_argument("--config", help="JSON run configuration; command line flags override it")
        r.add_argument("--problem")
        r.add_argument("--scheme")
        r.add_argument("--steps", type=int, nargs="+", help="step counts (powers of two)")
        r.add_argument("--T", type=float, dest="T")
        r.add_argument("--reference", choices=("exact", "self_fine", "semi_implicit_fine"))
        r.add_argument("--reference-steps", type=int)
        r.add_argument("--grid", help="problem parameters as JSON, e.g. '{\"N\": 128}'")
        r.add_argument("--seed", type=int)
        r.add_argument("--output", help="also write the result to this file")
        if name == "trace":
            r.add_argument("--residuals", action="store_true", help="add a max_residual column to CSV")

    t = sub.add_parser("tables", parents=[fmt], help="regenerate published convergence tables")
    t.add_argument("--suite", choices=tuple(SUITES), default="ode")
    t.add_argument("--out", default="tables", help="output directory")
    return p


def _run_config(args, parser) -> RunConfig:
    d = {}
    if args.config:
        with open(args.config) as fh:
            d = json.load(fh)
    overrides = {
        "problem": args.problem,
        "scheme": args.scheme,
        "T": args.T,
        "reference": args.reference,
        "reference_steps": args.reference_steps,
        "seed": args.seed,
    }
    d.update({k: v for k, v in overrides.items() if v is not None})
    if args.steps:
        d.pop("k", None)
        d["levels"] = args.steps
    if args.grid:
        d["grid"] = {**d.get("grid", {}), **json.loads(args.grid)}
    if "problem" not in d:
        parser.error("a problem is required (--problem or --config)")
    if d["problem"] not in PROBLEMS:
        parser.error(f"unknown problem {d['problem']!r}; choose from {', '.join(PROBLEMS)}")
    try:
        return RunConfig.from_dict(d)
    except (ValueError, TypeError) as exc:
        parser.error(str(exc))


def _write_output(path, text):
    if path:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_certify(args, out) -> int:
    gamma = load_scheme(args.scheme)
    cert = certify(gamma, args.order)
    if args.format == "csv":
        _emit("m,tilde_S_mm,beta1,beta2,beta3,beta4", out)
        diag = cert.certificate.diagonal
        rep = cert.report
        for m in range(1, gamma.stages + 1):
            _emit(",".join(str(x) for x in (m, diag[m - 1], rep.beta1[m], rep.beta2[m], rep.beta3[m], rep.beta4[m])), out)
        _emit(f"# verdict,{str(cert.verdict).lower()}", out)
    else:
        _emit(_dump(cert.to_json()), out)
    return OK if cert.verdict else VIOLATION


def _cmd_search(args, out) -> int:
    res = find_scheme(SearchConfig(args.stages, args.order, eps=args.eps, seed=args.seed, n_starts=args.starts))
    data = res.to_json()
    if args.format == "csv":
        _emit("field,value", out)
        for key in ("certified", "feasible", "objective", "message"):
            _emit(f"{key},{json.dumps(data[key])}", out)
        _emit(f"gamma,{json.dumps(json.dumps(data['gamma']))}", out)
    else:
        _emit(_dump(data), out)
    return OK


def _cmd_run(args, out, parser) -> int:
    cfg = _run_config(args, parser)
    code = OK
    try:
        report = run_convergence(cfg)
    except ConvergenceError as exc:
        report = exc.report
        print(f"minmove: {exc}", file=sys.stderr)
        code = VIOLATION
    text = report.to_csv() if args.format == "csv" else _dump(report.to_json())
    _emit(text, out)
    _write_output(args.output, text)
    return code


def _cmd_trace(args, out, parser) -> int:
    cfg = _run_config(args, parser)
    trace = run_energy_trace(cfg)
    text = trace.to_csv(residuals=args.residuals) if args.format == "csv" else _dump(trace.to_json())
    _emit(text, out)
    _write_output(args.output, text)
    if not trace.monotone:
        print(f"minmove: energy increased at steps {[v[0] for v in trace.violations]}", file=sys.stderr)
        return VIOLATION
    return OK


def _cmd_tables(args, out) -> int:
    manifest = load_tables()
    os.makedirs(args.out, exist_ok=True)
    summary = {"suite": args.suite, "settings": manifest.get("settings", {}), "tables": {}}
    code = OK
    for tid in SUITES[args.suite]:
        entry = manifest["tables"][tid]
        cfg = RunConfig.from_dict(entry["config"])
        try:
            report = run_convergence(cfg)
        except ConvergenceError as exc:
            report, code = exc.report, VIOLATION
        result = compare(report, entry)
        with open(os.path.join(args.out, f"{tid}.csv"), "w") as fh:
            fh.write(report.to_csv())
        with open(os.path.join(args.out, f"{tid}.json"), "w") as fh:
            fh.write(_dump({"report": report.to_json(), "comparison": result, "config": cfg.to_json()}))
        summary["tables"][tid] = {
            "title": entry.get("title", ""),
            "complete": report.complete,
            "matches_published": result["passed"],
            "config": cfg.to_json(),
        }
        print(f"{tid}: {'match' if result['passed'] else 'MISMATCH'}", file=sys.stderr)
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        fh.write(_dump(summary))
    if args.format == "csv":
        _emit("table,complete,matches_published", out)
        for tid, s in summary["tables"].items():
            _emit(f"{tid},{str(s['complete']).lower()},{str(s['matches_published']).lower()}", out)
    else:
        _emit(_dump(summary), out)
    return code


def cli_main(argv=None, out=None) -> int:
    """Parse ``argv`` and run one subcommand; returns the exit code."""
    out = sys.stdout if out is None else out
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        if args.command == "certify":
            return _cmd_certify(args, out)
        if args.command == "search":
            return _cmd_search(args, out)
        if args.command == "run":
            return _cmd_run(args, out, parser)
        if args.command == "trace":
            return _cmd_trace(args, out, parser)
        return _cmd_tables(args, out)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    except (GammaError, FileNotFoundError, KeyError) as exc:
        print(f"minmove: error: {exc}", file=sys.stderr)
        return USAGE


def main() -> None:
    sys.exit(cli_main())
