"""Numerical search for stable, high-order coefficient matrices.

A log-barrier keeps every diagonal auxiliary quantity above a margin while
BFGS drives the final-stage Taylor coefficients toward their targets. A
converged float matrix is then snapped to rationals: rows ``1..M-1`` by
continued fractions, and enough last-row entries by an exact linear solve
(the order conditions are linear in the last row). Only the exact
re-certification decides ``certified``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from .coefficients import DegenerateStageError, GammaMatrix, certify, compute_betas, serialize_gamma

__all__ = [
    "SearchConfig",
    "SearchResult",
    "NoFeasibleStartError",
    "betas_float",
    "stability_diagonal_float",
    "objective",
    "find_scheme",
    "rationalize",
]

_TARGETS = np.array([1.0, 0.5, 1.0 / 6.0, 1.0 / 6.0])
_NCOND = {1: 1, 2: 2, 3: 4}
_DEGENERATE = 1e-12


class NoFeasibleStartError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    stages: int
    target_order: int = 2
    eps: float = 1e-2
    barrier_weights: tuple = (1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 1e-10)
    max_iter: int = 400
    n_starts: int = 12
    denominator_bounds: tuple = (10, 20, 50, 100, 1000, 10 ** 4, 10 ** 6)
    tol: float = 1e-12
    seed: int = 0
    scale: float = 5.0

    def __post_init__(self):
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if self.target_order not in _NCOND:
            raise ValueError("target_order must be 1, 2 or 3")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1 or self.n_starts < 1 or not all(b > 0 for b in self.denominator_bounds):
            raise ValueError("iteration counts and denominator bounds must be positive")


@dataclass
class SearchResult:
    gamma_float: np.ndarray
    gamma_rational: GammaMatrix | None
    residuals: np.ndarray
    certified: bool
    objective: float = math.inf
    feasible: bool = False
    message: str = ""
    history: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "certified": self.certified,
            "feasible": self.feasible,
            "objective": self.objective,
            "message": self.message,
            "residuals": [float(r) for r in self.residuals],
            "gamma_float": [
                [float(x) for x in row[: m + 1]] for m, row in enumerate(self.gamma_float)
            ],
            "gamma": None
            if self.gamma_rational is None
            else [[str(x) for x in row] for row in self.gamma_rational.rows],
        }


def _to_matrix(x: np.ndarray, M: int) -> np.ndarray:
    G = np.zeros((M, M))
    G[np.tril_indices(M)] = x
    return G


def betas_float(G: np.ndarray) -> np.ndarray:
    """Final-stage ``(beta1, beta2, beta3, beta4)`` by the float recursion."""
    M = G.shape[0]
    b = np.zeros((4, M + 1))
    for m in range(1, M + 1):
        row = G[m - 1, :m]
        S = row.sum()
        if abs(S) < _DEGENERATE:
            raise ZeroDivisionError(f"row sum of stage {m} vanishes")
        tail = row[1:]
        b[0, m] = (1.0 + tail @ b[0, 1:m]) / S
        b[1, m] = (b[0, m] + tail @ b[1, 1:m]) / S
        b[2, m] = (b[1, m] + tail @ b[2, 1:m]) / S
        b[3, m] = (0.5 * b[0, m] ** 2 + tail @ b[3, 1:m]) / S
    return b[:, M]


def stability_diagonal_float(G: np.ndarray) -> np.ndarray:
    """Diagonal ``tilde_S[m, m]`` in floating point, ``m = 1..M``."""
    M = G.shape[0]
    tg = np.zeros((M + 1, M))
    tS = np.zeros((M + 1, M + 1))
    for m in range(M, 0, -1):
        for j in range(m + 1, M + 1):
            tS[j, m] = tg[j, :m].sum()
        for i in range(m):
            acc = G[m - 1, i]
            for j in range(m + 1, M + 1):
                if tS[j, j] == 0.0:
                    return np.full(M, -np.inf)
                acc -= tg[j, i] * tS[j, m] / tS[j, j]
            tg[m, i] = acc
        tS[m, m] = tg[m, :m].sum()
    return np.diag(tS)[1:]


def objective(gamma_float, target_order: int) -> float:
    """Squared mismatch of the final-stage betas; ``inf`` for degenerate rows."""
    G = np.asarray(gamma_float, dtype=float)
    try:
        b = betas_float(G)
    except ZeroDivisionError:
        return math.inf
    n = _NCOND[target_order]
    return float(np.sum((b[:n] - _TARGETS[:n]) ** 2))


def _feasible_start(cfg: SearchConfig, rng: np.random.Generator, tries: int = 10_000) -> np.ndarray:
    M = cfg.stages
    for _ in range(tries):
        G = rng.normal(scale=cfg.scale, size=(M, M))
        G = np.tril(G)
        # a strong subdiagonal keeps the stages close to chained backward Euler
        G[np.arange(M), np.arange(M)] = np.abs(G[np.arange(M), np.arange(M)]) + 2.0 * cfg.scale
        x = G[np.tril_indices(M)]
        if np.all(stability_diagonal_float(G) >= cfg.eps):
            return x
    raise NoFeasibleStartError(f"no feasible start in {tries} random draws")


def _barrier(x, M, cfg, mu):
    G = _to_matrix(x, M)
    d = stability_diagonal_float(G)
    if not np.all(d > cfg.eps):
        return math.inf
    f = objective(G, cfg.target_order)
    if not math.isfinite(f):
        return math.inf
    # log((d - eps) / (1 + d - eps)) blows up at the margin but stays bounded
    # as d grows, so the barrier cannot be lowered by inflating the diagonal
    slack = d - cfg.eps
    return f - mu * float(np.sum(np.log(slack / (1.0 + slack))))


def _fd_grad(fun, x, h=1e-7):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        fp, fm = fun(x + e), fun(x - e)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            f0 = fun(x)
            fp = fp if math.isfinite(fp) else f0
            fm = fm if math.isfinite(fm) else f0
        g[i] = (fp - fm) / (2.0 * e[i])
    return g


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Gaussian elimination over the rationals; ``None`` if singular."""
    n = len(b)
    A = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            return None
        A[c], A[piv] = A[piv], A[c]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [a - f * p for a, p in zip(A[r], A[c])]
    return [A[i][n] / A[i][i] for i in range(n)]


def rationalize(G: np.ndarray, target_order: int, bound: int):
    """Yield exact candidates near ``G`` that satisfy the order conditions.

    Rows ``1..M-1`` are rounded by continued fractions; for each choice of
    ``p`` last-row entries (``p`` = number of conditions) those are solved for
    exactly and the rest rounded.
    """
    M = G.shape[0]
    p = _NCOND[target_order]
    if p > M:
        return
    head = [[Fraction(float(G[m, i])).limit_denominator(bound) for i in range(m + 1)] for m in range(M - 1)]
    try:
        prefix = GammaMatrix.from_rows(head) if head else None
    except (DegenerateStageError, ValueError):
        return

    if prefix is not None:
        rep = compute_betas(prefix)
        betas = [rep.beta1, rep.beta2, rep.beta3, rep.beta4]
    else:
        betas = [[Fraction(0)]] * 4
    # coefficient of r_i in each condition; beta_{., 0} = 0
    coef = [
        [1 - (betas[0][i] if i else 0) for i in range(M)],
        [Fraction(1, 2) - (betas[1][i] if i else 0) for i in range(M)],
        [Fraction(1, 6) - (betas[2][i] if i else 0) for i in range(M)],
        [Fraction(1, 6) - (betas[3][i] if i else 0) for i in range(M)],
    ][:p]
    rhs = [Fraction(1), Fraction(1), Fraction(1, 2), Fraction(1, 2)][:p]
    rounded = [Fraction(float(G[M - 1, i])).limit_denominator(bound) for i in range(M)]
    combos = sorted(itertools.combinations(range(M), p), key=lambda c: [-i for i in reversed(c)])
    for free in combos:
        fixed = [i for i in range(M) if i not in free]
        A = [[row[i] for i in free] for row in coef]
        b = [r - sum(row[i] * rounded[i] for i in fixed) for row, r in zip(coef, rhs)]
        sol = _solve_exact(A, b)
        if sol is None:
            continue
        last = rounded[:]
        for i, v in zip(free, sol):
            last[i] = v
        try:
            yield GammaMatrix.from_rows(head + [last])
        except (DegenerateStageError, ValueError):
            continue


def find_scheme(config: SearchConfig) -> SearchResult:
    """Barrier-constrained search from several random feasible starts."""
    M = config.stages
    rng = np.random.default_rng(config.seed)
    best_x, best_f = None, math.inf
    history = []
    for start in range(config.n_starts):
        x = _feasible_start(config, rng)
        for mu in config.barrier_weights:
            fun = lambda z, mu=mu: _barrier(z, M, config, mu)
            res = minimize(
                fun, x, jac=lambda z, fun=fun: _fd_grad(fun, z), method="BFGS",
                options={"maxiter": config.max_iter, "gtol": 1e-12},
            )
            if math.isfinite(res.fun) and np.all(stability_diagonal_float(_to_matrix(res.x, M)) >= config.eps):
                x = res.x
        f = objective(_to_matrix(x, M), config.target_order)
        history.append((start, f))
        if f < best_f:
            best_x, best_f = x, f
        if best_f < config.tol:
            break

    G = _to_matrix(best_x, M)
    n = _NCOND[config.target_order]
    residuals = betas_float(G)[:n] - _TARGETS[:n]
    feasible = bool(np.all(stability_diagonal_float(G) >= config.eps))
    result = SearchResult(G, None, residuals, False, best_f, feasible, history=history)
    if not (feasible and best_f < config.tol):
        result.message = f"objective {best_f:.3e} did not reach {config.tol:.1e} under the stability margin"
        return result
    for bound in config.denominator_bounds:
        for cand in rationalize(G, config.target_order, bound):
            if certify(cand, config.target_order).verdict:
                result.gamma_rational = cand
                result.certified = True
                result.message = f"certified with denominator bound {bound}"
                return result
    result.message = "float solution found but no nearby rational matrix certified"
    return result


def describe(result: SearchResult) -> str:
    if result.gamma_rational is None:
        return result.message
    return f"{result.message}: {serialize_gamma(result.gamma_rational)}"
