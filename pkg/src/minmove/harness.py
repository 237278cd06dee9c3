"""Convergence studies, energy traces and state export.

A :class:`RunConfig` names a problem, a scheme and a list of step counts.
:func:`run_convergence` integrates once per step count, measures the error
at the final time against a reference, and reports successive observed
orders. :func:`run_energy_trace` records the energy after every step.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .coefficients import GammaMatrix, load_scheme
from .flow import EnergyIncreaseError, FlowError, integrate
from .problems import get_problem, reference_semi_implicit

__all__ = [
    "ConvergenceError",
    "ConvergenceReport",
    "EnergyTrace",
    "RunConfig",
    "load_state",
    "load_tables",
    "observed_orders",
    "run_convergence",
    "run_energy_trace",
    "run_table",
    "save_state",
    "thread_count",
]

REFERENCES = ("exact", "self_fine", "semi_implicit_fine")
ERROR_NORMS = ("L2_grid", "abs")


class ConvergenceError(FlowError):
    """A level failed; ``report`` holds every level finished before it."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


def _is_pow2(n) -> bool:
    return isinstance(n, int) and not isinstance(n, bool) and n >= 1 and n & (n - 1) == 0


def thread_count() -> int:
    """Worker threads for independent levels, from ``MINMOVE_THREADS``."""
    raw = os.environ.get("MINMOVE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"MINMOVE_THREADS must be an integer, got {raw!r}") from None
    return max(n, 1)


@dataclass
class RunConfig:
    """What to integrate, how finely, and what to compare against.

    ``T`` defaults to the problem's own final time and ``error_norm`` to the
    problem's native norm. ``reference_steps`` applies to the two fine-run
    references; with ``richardson`` the semi-implicit reference is the
    extrapolation ``(4 u_{2n} - u_n) / 3`` of runs with ``n/2`` and ``n``
    steps.
    """

    problem: str
    scheme: str = "builtin:second_order_a"
    levels: tuple = (16,)
    T: float | None = None
    params: dict = field(default_factory=dict)
    error_norm: str | None = None
    reference: str = "exact"
    reference_steps: int = 8192
    richardson: bool = True
    output: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.levels = tuple(self.levels)
        if not self.levels:
            raise ValueError("levels must not be empty")
        if not all(_is_pow2(n) for n in self.levels):
            raise ValueError(f"levels must be powers of two, got {list(self.levels)}")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly increasing")
        if self.reference not in REFERENCES:
            raise ValueError(f"reference must be one of {REFERENCES}, got {self.reference!r}")
        if self.error_norm is not None and self.error_norm not in ERROR_NORMS:
            raise ValueError(f"error_norm must be one of {ERROR_NORMS}, got {self.error_norm!r}")
        if self.T is not None and not self.T > 0:
            raise ValueError("T must be positive")
        if self.reference_steps < 2 or (self.richardson and self.reference_steps % 2):
            raise ValueError("reference_steps must be an even integer >= 2")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        """Accept the JSON layout ``{"problem", "grid", "k", "scheme", ...}``.

        ``grid`` holds problem constructor arguments. ``k`` may be a step
        size (with ``T``) or ``{"steps": n, "T": t}``; either fixes a single
        level.
        """
        d = dict(d)
        if "problem" not in d:
            raise ValueError("config needs a 'problem'")
        params = dict(d.pop("grid", {}) or {})
        params.update(d.pop("params", {}) or {})
        k = d.pop("k", None)
        if k is not None:
            if isinstance(k, dict):
                if "T" in k:
                    d["T"] = float(k["T"])
                d["levels"] = [int(k["steps"])]
            else:
                if "T" not in d:
                    raise ValueError("a numeric 'k' needs 'T' alongside it")
                n = d["T"] / float(k)
                if not math.isclose(n, round(n), rel_tol=1e-9):
                    raise ValueError("T / k must be an integer number of steps")
                d["levels"] = [int(round(n))]
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(params=params, **d)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def build_problem(self):
        params = dict(self.params)
        if self.T is not None:
            params["T"] = self.T
        return get_problem(self.problem, **params)

    def build_scheme(self) -> GammaMatrix:
        return load_scheme(self.scheme)

    def to_json(self) -> dict:
        d = asdict(self)
        d["levels"] = list(self.levels)
        return d


def observed_orders(errors, levels=None) -> list[float]:
    """``log(e_j / e_{j+1}) / log(n_{j+1} / n_j)``; plain ``log2`` ratios when levels double."""
    e = [float(x) for x in errors]
    if levels is None:
        levels = [2 ** j for j in range(len(e))]
    out = []
    for (e0, e1), (n0, n1) in zip(zip(e, e[1:]), zip(levels, levels[1:])):
        if e0 > 0 and e1 > 0:
            out.append(math.log(e0 / e1) / math.log(n1 / n0))
        else:
            out.append(math.nan)
    return out


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


@dataclass
class ConvergenceReport:
    scheme: str
    problem: str
    levels: list
    errors: list
    orders: list
    energy_traces: list
    wall_times: list
    error_norm: str
    reference: str
    T: float
    complete: bool = True
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["steps", "error", "order"])
        for j, (n, e) in enumerate(zip(self.levels, self.errors)):
            w.writerow([n, _fmt(e), _fmt(self.orders[j - 1]) if j else ""])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "scheme": self.scheme,
            "problem": self.problem,
            "T": self.T,
            "error_norm": self.error_norm,
            "reference": self.reference,
            "complete": self.complete,
            "levels": list(self.levels),
            "errors": [float(e) for e in self.errors],
            "orders": [None if math.isnan(o) else float(o) for o in self.orders],
            "energy_traces": [[float(x) for x in tr] for tr in self.energy_traces],
            "wall_times": [float(t) for t in self.wall_times],
            "metadata": self.metadata,
        }


def _reference(config: RunConfig, problem, gamma, u0):
    """Reference state at ``T`` and a dict describing how it was obtained."""
    T = problem.T
    if config.reference == "exact":
        if not hasattr(problem, "exact"):
            raise ValueError(f"problem {config.problem!r} has no exact solution; pick another reference")
        return problem.exact(T), {"kind": "exact"}
    n = config.reference_steps
    if config.reference == "self_fine":
        tr = integrate(problem, gamma, u0, T / n, n, keep_states=False)
        return tr.final, {"kind": "self_fine", "steps": n}
    if not hasattr(problem, "semi_implicit_split"):
        raise ValueError(f"problem {config.problem!r} has no semi-implicit reference scheme")
    fine = reference_semi_implicit(problem, T / n, n, u0=u0).final
    meta = {"kind": "semi_implicit_fine", "steps": n, "richardson": config.richardson}
    if config.richardson:
        coarse = reference_semi_implicit(problem, 2.0 * T / n, n // 2, u0=u0).final
        # the unextrapolated gap bounds the reference error from above
        meta["self_convergence_gap"] = float(problem.error(fine, coarse))
        fine = (4.0 * fine - coarse) / 3.0
    return fine, meta


def run_convergence(config: RunConfig, threads: int | None = None) -> ConvergenceReport:
    """Integrate every level to ``T`` and measure the error against the reference.

    An energy increase or solver failure at any level raises
    :class:`ConvergenceError` whose ``report`` holds the levels before it.
    """
    problem = config.build_problem()
    gamma = config.build_scheme()
    norm = config.error_norm or problem.error_norm
    if norm != problem.error_norm:
        raise ValueError(f"problem {config.problem!r} measures errors in {problem.error_norm!r}, not {norm!r}")
    u0 = problem.initial_state()
    T = problem.T
    ref, ref_meta = _reference(config, problem, gamma, u0)

    def one(n):
        t0 = time.perf_counter()
        tr = integrate(problem, gamma, u0, T / n, n, keep_states=False, strict=True)
        return problem.error(tr.final, ref), tr.energies, time.perf_counter() - t0

    threads = thread_count() if threads is None else max(int(threads), 1)
    results, failure = {}, None
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {n: pool.submit(one, n) for n in config.levels}
        for n in config.levels:
            try:
                results[n] = futures[n].result()
            except (FlowError, ValueError, ArithmeticError) as exc:
                failure = (n, exc)
                break

    done = [n for n in config.levels if n in results]
    errors = [results[n][0] for n in done]
    report = ConvergenceReport(
        scheme=gamma.name or config.scheme,
        problem=config.problem,
        levels=done,
        errors=errors,
        orders=observed_orders(errors, done),
        energy_traces=[results[n][1] for n in done],
        wall_times=[results[n][2] for n in done],
        error_norm=norm,
        reference=config.reference,
        T=T,
        complete=failure is None,
        metadata={"reference": ref_meta, "params": dict(config.params), "seed": config.seed},
    )
    if failure is not None:
        n, exc = failure
        kind = "energy increase" if isinstance(exc, EnergyIncreaseError) else "solver failure"
        report.metadata["failure"] = {"steps": n, "kind": kind, "message": str(exc)}
        raise ConvergenceError(f"{kind} at {n} steps: {exc}", report) from exc
    return report


@dataclass
class EnergyTrace:
    problem: str
    scheme: str
    steps: np.ndarray
    times: np.ndarray
    energies: np.ndarray
    max_residuals: np.ndarray
    violations: list

    @property
    def monotone(self) -> bool:
        return not self.violations

    def to_csv(self, residuals: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "t", "energy"] + (["max_residual"] if residuals else []))
        for j, (t, e) in enumerate(zip(self.times, self.energies)):
            row = [j, _fmt(t), _fmt(e)]
            if residuals:
                row.append(_fmt(self.max_residuals[j]))
            w.writerow(row)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "problem": self.problem,
            "scheme": self.scheme,
            "monotone": self.monotone,
            "step": [int(s) for s in self.steps],
            "t": [float(t) for t in self.times],
            "energy": [float(e) for e in self.energies],
            "max_residual": [float(r) for r in self.max_residuals],
            "violations": [list(v) for v in self.violations],
        }


def run_energy_trace(config: RunConfig) -> EnergyTrace:
    """Energies after every step of the first level; violations are recorded, not raised."""
    problem = config.build_problem()
    gamma = config.build_scheme()
    n = config.levels[0]
    tr = integrate(problem, gamma, problem.initial_state(), problem.T / n, n, keep_states=False, strict=False)
    return EnergyTrace(
        problem=config.problem,
        scheme=gamma.name or config.scheme,
        steps=np.arange(n + 1),
        times=tr.times,
        energies=tr.energies,
        max_residuals=tr.max_residuals,
        violations=tr.violations,
    )


def _grid_header(grid) -> dict:
    if grid is None:
        return {}
    return {"N": int(grid.N), "L": float(grid.L)}


def save_state(path, u, grid=None, fmt: str | None = None) -> None:
    """Write a state as a CSV grid or flat little-endian float64.

    Both formats start with one header line ``# {"N": .., "L": .., "shape": ..}``;
    values follow in row-major order.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    fmt = fmt or ("csv" if str(path).endswith(".csv") else "bin")
    header = _grid_header(grid)
    header["shape"] = list(u.shape)
    line = "# " + json.dumps(header, sort_keys=True) + "\n"
    if fmt == "csv":
        rows = u.reshape(u.shape[0], -1) if u.ndim > 1 else u.reshape(1, -1)
        with open(path, "w") as fh:
            fh.write(line)
            np.savetxt(fh, rows, delimiter=",", fmt="%.17g")
    elif fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(line.encode())
            fh.write(u.astype("<f8").tobytes(order="C"))
    else:
        raise ValueError(f"unknown state format {fmt!r}")


def load_state(path):
    """Inverse of :func:`save_state`; returns ``(array, header)``."""
    with open(path, "rb") as fh:
        first = fh.readline().decode()
        if not first.startswith("# "):
            raise ValueError("missing state header")
        header = json.loads(first[2:])
        body = fh.read()
    shape = tuple(header["shape"])
    if str(path).endswith(".csv"):
        u = np.loadtxt(io.StringIO(body.decode()), delimiter=",", ndmin=2)
    else:
        u = np.frombuffer(body, dtype="<f8").copy()
    return u.reshape(shape), header


def load_tables() -> dict:
    """The bundled table manifest: published values, tolerances and desk-scale settings."""
    text = resources.files("minmove").joinpath("data/tables.json").read_text()
    return json.loads(text)


def run_table(table_id: str, manifest: dict | None = None, threads: int | None = None) -> tuple[ConvergenceReport, dict]:
    """Regenerate one table at its desk-scale settings and compare with the published row."""
    manifest = manifest or load_tables()
    entry = manifest["tables"][table_id]
    cfg = RunConfig.from_dict(entry["config"])
    report = run_convergence(cfg, threads=threads)
    return report, compare(report, entry)


def compare(report: ConvergenceReport, entry: dict) -> dict:
    """Check a report against a manifest entry's published cells and tolerances."""
    tol = entry.get("tolerance", {})
    published = dict(zip(entry["levels"], entry["errors"]))
    checks = []
    rel = tol.get("error_rel")
    if rel is not None:
        skip = set(tol.get("skip_levels", []))
        finest_rel = tol.get("finest_error_rel", rel)
        finest = set(tol.get("finest_levels", []))
        for n, e in zip(report.levels, report.errors):
            if n in published and n not in skip:
                r = finest_rel if n in finest else rel
                ok = abs(e - published[n]) <= r * published[n]
                checks.append({"cell": f"error@{n}", "value": e, "published": published[n], "rel_tol": r, "ok": ok})
    pub_orders = dict(zip(entry["levels"][1:], entry["orders"]))
    if "order_abs" in tol:
        for n, o in zip(report.levels[1:], report.orders):
            if n in pub_orders:
                ok = abs(o - pub_orders[n]) <= tol["order_abs"]
                checks.append({"cell": f"order@{n}", "value": o, "published": pub_orders[n], "abs_tol": tol["order_abs"], "ok": ok})
    if "order_range" in tol:
        lo, hi = tol["order_range"]
        for n, o in zip(report.levels[1:], report.orders):
            checks.append({"cell": f"order@{n}", "value": o, "range": [lo, hi], "ok": lo <= o <= hi})
    return {"table": entry.get("title", ""), "passed": all(c["ok"] for c in checks), "checks": checks}
