"""Scalar gradient flows: ``E = cosh`` and a piecewise-linear energy."""

from __future__ import annotations

import math

import numpy as np

from ..flow import FlowProblem, ProxResult, TOL_RES

__all__ = ["CoshODE", "NonsmoothODE"]


class _ScalarProblem(FlowProblem):
    error_norm = "abs"

    def inner(self, u, v):
        return float(np.dot(u, v))

    def initial_state(self) -> np.ndarray:
        return np.array([self.u0], dtype=float)

    def error(self, u, v) -> float:
        return float(np.max(np.abs(np.asarray(u) - np.asarray(v))))


class CoshODE(_ScalarProblem):
    """``u' = -sinh(u)``, energy ``cosh(u)``, ``u(0) = -2`` by default."""

    name = "ode_cosh"

    def __init__(self, u0: float = -2.0, T: float = 2.0):
        self.u0 = float(u0)
        self.T = float(T)

    def energy(self, u):
        return float(np.cosh(u[0]))

    def gradient(self, u):
        return np.sinh(u)

    def hess_vec(self, u, v):
        return np.cosh(u) * v

    def exact(self, t: float) -> np.ndarray:
        # tanh(u/2) decays like exp(-t)
        c = math.tanh(self.u0 / 2.0) * math.exp(-t)
        return np.array([2.0 * math.atanh(c)])

    def solve_prox(self, w, anchor, guess, tol_res=TOL_RES, **_):
        u, iters = scalar_prox_cosh(w, float(anchor[0]), float(guess[0]))
        return ProxResult(np.array([u]), iters, 0.0)


def scalar_prox_cosh(w: float, a: float, guess: float | None = None, max_iter: int = 200):
    """Root of ``w (u - a) + sinh(u) = 0`` by Newton inside a shrinking bracket.

    The residual is increasing in ``u`` and changes sign on ``[min(a,0),
    max(a,0)]``, so bisection is always a valid fallback.
    """
    if not w > 0.0:
        raise ValueError("prox weight must be positive")
    lo, hi = min(a, 0.0), max(a, 0.0)
    if lo == hi:
        return lo, 0
    u = guess if guess is not None and lo < guess < hi else 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        f = w * (u - a) + math.sinh(u)
        if f == 0.0:
            return u, it
        if f > 0.0:
            hi = u
        else:
            lo = u
        nxt = u - f / (w + math.cosh(u))
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if nxt == u or hi - lo <= 2.0 * np.spacing(max(abs(lo), abs(hi))):
            return nxt, it
        u = nxt
    return u, max_iter


class NonsmoothODE(_ScalarProblem):
    """Energy ``|u|/2`` on ``|u| < 1`` and ``|u - 1| + 1/2`` on ``|u| >= 1``.

    The formula jumps at ``u = -1`` (``5/2`` from the left, ``1/2`` from the
    right). The point value there is taken as ``1/2``, the lower
    semicontinuous choice, so that every prox problem has a minimizer. Kinks
    sit at ``-1``, ``0`` and ``1``; the prox compares all piecewise stationary
    points and the kink points.

    The default ``u0 = pi/2`` crosses the kink at ``u = 1`` at the irrational
    time ``pi/2 - 1``, so no uniform step grid resolves it exactly.
    """

    name = "ode_nonsmooth"
    smooth = False

    def __init__(self, u0: float = math.pi / 2, T: float = 2.0):
        self.u0 = float(u0)
        self.T = float(T)

    @staticmethod
    def _E(x: float) -> float:
        return 0.5 * abs(x) if -1.0 <= x < 1.0 else abs(x - 1.0) + 0.5

    @staticmethod
    def _slope(x: float) -> float:
        if x > 1.0:
            return 1.0
        if x > 0.0:
            return 0.5
        if x == 0.0:
            return 0.0
        if x > -1.0:
            return -0.5
        return -1.0

    def energy(self, u):
        return self._E(float(u[0]))

    def gradient(self, u):
        """Derivative where it exists; the minimal-norm subgradient elsewhere."""
        x = float(u[0])
        if x == 1.0:
            return np.array([0.5])
        return np.array([self._slope(x)])

    def solve_prox(self, w, anchor, guess, **_):
        return ProxResult(np.array([prox_nonsmooth(w, float(anchor[0]))]), 0, 0.0)

    def exact(self, t: float) -> np.ndarray:
        """Solution of the differential inclusion (minimal-norm velocity)."""
        x, s = self.u0, float(t)
        if x <= -1.0:
            dt = min(s, -1.0 - x)
            x, s = x + dt, s - dt
            if s > 0.0:
                dt = min(s, 2.0)
                x, s = -1.0 + 0.5 * dt, s - dt
        elif x > 1.0:
            dt = min(s, x - 1.0)
            x, s = x - dt, s - dt
        if s > 0.0 and 0.0 < x <= 1.0:
            x = 0.0 if s >= 2.0 * x else x - 0.5 * s
        elif s > 0.0 and -1.0 < x < 0.0:
            x = 0.0 if s >= -2.0 * x else x + 0.5 * s
        return np.array([x])


def prox_nonsmooth(w: float, a: float) -> float:
    """Global minimizer of ``E(u) + (w/2)(u - a)^2`` for :class:`NonsmoothODE`."""
    if not w > 0.0:
        raise ValueError("prox weight must be positive")
    candidates = [-1.0, 0.0, 1.0]
    # (lower, upper, slope) of each linear piece, open intervals
    for lo, hi, slope in ((-math.inf, -1.0, -1.0), (-1.0, 0.0, -0.5), (0.0, 1.0, 0.5), (1.0, math.inf, 1.0)):
        x = a - slope / w
        if lo < x < hi:
            candidates.append(x)
    best = min(candidates, key=lambda x: (NonsmoothODE._E(x) + 0.5 * w * (x - a) ** 2, abs(x - a)))
    return best
