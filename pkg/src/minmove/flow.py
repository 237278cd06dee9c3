"""Multi-stage minimizing-movements stepper for abstract gradient flows.

Each stage is one proximal solve ``argmin_u E(u) + (w/2)||u - a||^2``; the
several movement limiters of a stage are first collapsed into one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coefficients import GammaMatrix

__all__ = [
    "TOL_RES",
    "TOL_LIN",
    "MAX_NEWTON",
    "FlowError",
    "NonCoerciveStageError",
    "ProxError",
    "StageError",
    "EnergyIncreaseError",
    "ProxResult",
    "FlowProblem",
    "StepTrace",
    "Trajectory",
    "collapse_anchors",
    "default_prox",
    "stage_solve",
    "step",
    "integrate",
    "tol_mono",
    "check_finite",
]

TOL_RES = 1e-12
TOL_LIN = 1e-10
MAX_NEWTON = 50
_EPS = np.finfo(float).eps


class FlowError(RuntimeError):
    pass


class NonCoerciveStageError(FlowError):
    """Collapsed movement-limiter weight is not positive."""


class ProxError(FlowError):
    """Inner solver failed; ``history`` holds residual norms per iteration."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class StageError(FlowError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


class EnergyIncreaseError(FlowError):
    pass


def check_finite(u: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(u)):
        raise FlowError(f"non-finite values in state at {where}")
    return u


def tol_mono(e0: float) -> float:
    return 1e-10 * (1.0 + abs(e0))


@dataclass
class ProxResult:
    u: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    history: list = field(default_factory=list)


class FlowProblem:
    """Energy, metric and proximal solve for one gradient flow.

    Subclasses implement :meth:`energy`, :meth:`gradient` (the Riesz
    representative with respect to :meth:`inner`) and usually :meth:`inner`.
    :meth:`solve_prox` defaults to :func:`default_prox`; override it when a
    closed-form or spectral solve exists. Instances must not mutate
    themselves during evaluation.
    """

    name = "problem"
    smooth = True

    def energy(self, u: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.vdot(u, v).real)

    def norm(self, u: np.ndarray) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))

    def hess_vec(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Directional derivative of :meth:`gradient` at ``u`` along ``v``."""
        nv = self.norm(v)
        if nv == 0.0:
            return np.zeros_like(v)
        h = math.sqrt(_EPS) * (1.0 + self.norm(u)) / nv
        return (self.gradient(u + h * v) - self.gradient(u - h * v)) / (2.0 * h)

    def preconditioner(self, w: float, u: np.ndarray) -> Callable | None:
        """Approximate inverse of ``w + Hess E(u)``; ``None`` means identity."""
        return None

    def project(self, v: np.ndarray) -> np.ndarray:
        """Map a direction onto the admissible subspace (identity by default)."""
        return v

    def solve_prox(self, w: float, anchor: np.ndarray, guess: np.ndarray, **tol) -> ProxResult:
        return default_prox(self, w, anchor, guess, **tol)

    def prox(self, w: float, anchor: np.ndarray, guess: np.ndarray | None = None, **tol) -> np.ndarray:
        """``argmin_u E(u) + (w/2)||u - anchor||^2``."""
        if guess is None:
            guess = anchor
        return self.solve_prox(w, anchor, guess, **tol).u


def collapse_anchors(weights: Sequence[float], anchors: Sequence[np.ndarray]):
    """Replace ``sum_i (w_i/2)||u - U_i||^2`` by ``(W/2)||u - a||^2``.

    ``W = sum w_i`` and ``a = sum w_i U_i / W``; the two objectives differ by a
    constant in ``u``, so they share minimizers. Raises
    :class:`NonCoerciveStageError` when ``W <= 0``.
    """
    if len(weights) != len(anchors) or len(weights) == 0:
        raise ValueError("need one weight per anchor")
    total = float(sum(weights))
    if not total > 0.0:
        raise NonCoerciveStageError(f"combined weight {total!r} is not positive")
    acc = np.zeros_like(np.asarray(anchors[0], dtype=float))
    for wi, ui in zip(weights, anchors):
        if wi != 0.0:
            acc = acc + (wi / total) * ui
    return total, acc


def _truncated_pcg(apply, rhs, inner, precond, rtol, maxiter, curvature_floor=0.0):
    """CG in a general inner product, stopping at negative curvature.

    Returns ``(x, iterations, hit_negative_curvature)``. Curvature
    ``<p, Ap> / <p, p>`` at or below ``curvature_floor`` counts as negative,
    which keeps near-singular directions from producing huge steps. If this
    happens on the very first direction, that (preconditioned
    steepest-descent) direction is returned instead of zero.
    """
    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = inner(r, z)
    target = rtol * math.sqrt(max(inner(rhs, rhs), 0.0))
    for it in range(1, maxiter + 1):
        Ap = apply(p)
        pAp = inner(p, Ap)
        if pAp <= curvature_floor * inner(p, p):
            return (p if it == 1 else x), it, True
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if math.sqrt(max(inner(r, r), 0.0)) <= target:
            return x, it, False
        z = precond(r) if precond is not None else r
        rz_new = inner(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, maxiter, False


def _residual_floor(problem, w, anchor, u, R) -> float:
    """Change in ``|R|`` caused by perturbing ``u`` at machine precision."""
    signs = np.where(np.arange(u.size).reshape(u.shape) % 3 == 0, -1.0, 1.0)
    v = u + _EPS * np.maximum(np.abs(u), 1.0) * signs
    Rv = w * (v - anchor) + problem.gradient(v)
    return problem.norm(Rv - R)


def default_prox(
    problem: FlowProblem,
    w: float,
    anchor: np.ndarray,
    guess: np.ndarray,
    tol_res: float = TOL_RES,
    tol_lin: float = TOL_LIN,
    max_newton: int = MAX_NEWTON,
    max_cg: int = 500,
) -> ProxResult:
    """Damped Newton on ``R(u) = w(u - anchor) + gradient(u)``.

    Newton systems ``(w + Hess) d = -R`` are solved by truncated PCG in the
    problem's inner product. The line search enforces decrease of the stage
    objective ``E(u) + (w/2)||u - anchor||^2`` itself, so every accepted
    iterate has an objective no larger than the warm start's.
    """
    if not w > 0.0:
        raise NonCoerciveStageError(f"prox weight {w!r} is not positive")

    def objective(u):
        d = u - anchor
        return problem.energy(u) + 0.5 * w * problem.inner(d, d)

    scale = tol_res * (w * problem.norm(anchor) + problem.norm(problem.gradient(anchor)) + 1.0)
    u = check_finite(np.array(guess, dtype=float, copy=True), "prox start")
    phi = objective(u)
    history = []
    floor = None
    for it in range(max_newton + 1):
        g = problem.gradient(u)
        R = w * (u - anchor) + g
        rnorm = problem.norm(R)
        history.append(rnorm)
        if rnorm <= scale:
            return ProxResult(u, it, rnorm, history)
        if it >= 2 and rnorm > 0.1 * history[-2]:
            # stalled: accept once |R| is within reach of its rounding noise
            if floor is None:
                floor = _residual_floor(problem, w, anchor, u, R)
            if rnorm <= 8.0 * floor:
                return ProxResult(u, it, rnorm, history)
        if it == max_newton:
            break

        precond = problem.preconditioner(w, u)
        d, _, _ = _truncated_pcg(
            lambda v: w * v + problem.hess_vec(u, v),
            -R, problem.inner, precond, tol_lin, max_cg, 1e-6 * w,
        )
        d = problem.project(d)
        slope = problem.inner(R, d)
        if not slope < 0.0:
            d = -R
            slope = -rnorm * rnorm
        slack = 64.0 * _EPS * (abs(phi) + 1.0)
        alpha = 1.0
        for _ in range(40):
            trial = u + alpha * d
            phi_t = objective(trial)
            if np.isfinite(phi_t) and phi_t <= phi + 1e-4 * alpha * slope + slack:
                break
            alpha *= 0.5
        else:
            raise ProxError(
                f"line search stagnated at Newton iteration {it} (|R| = {rnorm:.3e})", history
            )
        u = check_finite(trial, "prox iterate")
        phi = min(phi, phi_t)
    raise ProxError(
        f"no convergence in {max_newton} Newton iterations (|R| = {history[-1]:.3e}, "
        f"target {scale:.3e})",
        history,
    )


def stage_solve(
    problem: FlowProblem,
    gamma_row: Sequence[float],
    k: float,
    states: Sequence[np.ndarray],
    guess: np.ndarray,
    tol_res: float = TOL_RES,
    **tol,
) -> ProxResult:
    """One stage: collapse ``len(states)`` limiters and call the problem's prox.

    The returned residual is ``||S(U - a)/k + gradient(U)||``; it must be at
    most ``tol_res * (w ||a|| + ||gradient(U)|| + 1)`` for smooth problems,
    the same scale the default prox stops on.
    """
    if not k > 0.0:
        raise ValueError(f"time step must be positive, got {k!r}")
    weights = [float(gi) / k for gi in gamma_row]
    w, anchor = collapse_anchors(weights, states)
    res = problem.solve_prox(w, anchor, guess, tol_res=tol_res, **tol)
    check_finite(res.u, "stage output")
    if problem.smooth:
        g = problem.gradient(res.u)
        rnorm = problem.norm(w * (res.u - anchor) + g)
        limit = tol_res * (w * problem.norm(anchor) + problem.norm(g) + 1.0)
        # Closed-form and spectral solvers sit at rounding level; allow headroom.
        if rnorm > 100.0 * limit:
            raise ProxError(f"stage residual {rnorm:.3e} exceeds {limit:.3e}", res.history)
        res.residual = rnorm
    return res


@dataclass
class StepTrace:
    stage_states: list
    stage_energies: list
    prox_iterations: list
    residuals: list
    energy_decrease_ok: bool


def step(
    problem: FlowProblem,
    gamma: GammaMatrix | np.ndarray,
    u_n: np.ndarray,
    k: float,
    keep_stages: bool = True,
    **tol,
):
    """Advance one full step; returns ``(u_{n+1}, StepTrace)``.

    Stage ``m`` is warm-started from ``U_{m-1}``.
    """
    G = gamma.as_float() if isinstance(gamma, GammaMatrix) else np.asarray(gamma, dtype=float)
    U = [check_finite(np.asarray(u_n, dtype=float), "step start")]
    energies = [problem.energy(U[0])]
    iters, residuals = [], []
    for m in range(1, G.shape[0] + 1):
        try:
            res = stage_solve(problem, G[m - 1, :m], k, U, U[-1], **tol)
        except FlowError as exc:
            raise StageError(m, exc) from exc
        U.append(res.u)
        energies.append(problem.energy(res.u))
        iters.append(res.iterations)
        residuals.append(res.residual)
    ok = energies[-1] <= energies[0] + tol_mono(energies[0])
    trace = StepTrace(U if keep_stages else [U[0], U[-1]], energies, iters, residuals, ok)
    return U[-1], trace


@dataclass
class Trajectory:
    times: np.ndarray
    energies: np.ndarray
    states: list
    max_residuals: np.ndarray
    prox_iterations: np.ndarray
    violations: list

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def monotone(self) -> bool:
        return not self.violations


def integrate(
    problem: FlowProblem,
    gamma: GammaMatrix,
    u0: np.ndarray,
    k: float,
    n_steps: int,
    keep_states: bool = True,
    strict: bool | None = None,
    **tol,
) -> Trajectory:
    """Take ``n_steps`` steps of size ``k`` from ``u0``.

    Energy increases beyond ``1e-10 (1 + |E(u_0)|)`` are recorded in
    ``violations``; with ``strict`` (default: whenever ``gamma`` is certified
    stable) the first one raises :class:`EnergyIncreaseError`.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if strict is None:
        strict = isinstance(gamma, GammaMatrix) and gamma.is_stable
    G = gamma.as_float() if isinstance(gamma, GammaMatrix) else np.asarray(gamma, dtype=float)
    u = np.asarray(u0, dtype=float)
    energies = [problem.energy(u)]
    slack = tol_mono(energies[0])
    states = [u] if keep_states else None
    max_res, iters, violations = [0.0], [0], []
    for n in range(n_steps):
        u, trace = step(problem, G, u, k, keep_stages=False, **tol)
        energies.append(trace.stage_energies[-1])
        max_res.append(max(trace.residuals))
        iters.append(sum(trace.prox_iterations))
        if energies[-1] > energies[-2] + slack:
            violations.append((n + 1, energies[-2], energies[-1]))
            if strict:
                raise EnergyIncreaseError(
                    f"energy rose from {energies[-2]!r} to {energies[-1]!r} at step {n + 1}"
                )
        if keep_states:
            states.append(u)
    if not keep_states:
        states = [np.asarray(u0, dtype=float), u]
    return Trajectory(
        times=k * np.arange(n_steps + 1),
        energies=np.array(energies),
        states=states,
        max_residuals=np.array(max_res),
        prox_iterations=np.array(iters),
        violations=violations,
    )
