"""Cahn-Hilliard: the same phase-field energy, descending in the H^-1 metric."""

from __future__ import annotations

import numpy as np

from ..flow import FlowError, default_prox
from .allen_cahn import _PeriodicPhaseField

__all__ = ["CahnHilliard2D", "MassDriftError"]


class MassDriftError(FlowError):
    pass


class CahnHilliard2D(_PeriodicPhaseField):
    """``u_t = -Laplacian(Laplacian u - W'(u))`` on ``[-10, 10)^2``.

    ``inner`` is ``int (u - mean u) (-Laplacian)^-1 (v - mean v)``; it is
    positive definite on zero-mean fields only, and the mean (mass) is an
    invariant of every stage.
    """

    name = "pde_cahn_hilliard_2d"
    mass_rtol = 1e-10

    def __init__(self, N: int = 256, L: float = 10.0, T: float = 20.0):
        super().__init__(N, L, T)
        ksq = self.grid.ksq
        inv = np.zeros_like(ksq)
        np.divide(1.0, ksq, out=inv, where=ksq > 0)
        self._inv_ksq = inv

    def initial_state(self) -> np.ndarray:
        X, Y = self.grid.coords
        return 1.0 / (1.0 + np.exp(-(5.0 - np.sqrt(X ** 2 + 2.0 * Y ** 2))))

    def mass(self, u) -> float:
        return self.grid.integrate(u)

    def project(self, v):
        return v - np.mean(v)

    def inner(self, u, v):
        g = self.grid
        return g.inner(self.project(u), g.apply_symbol(self._inv_ksq, v))

    def gradient(self, u):
        return self.grid.apply_symbol(self.grid.ksq, self.chemical_potential(u))

    def hess_vec(self, u, v):
        g = self.grid
        return g.apply_symbol(g.ksq, -g.laplacian(v) + self.well.d2W(u) * v)

    def preconditioner(self, w, u):
        g = self.grid
        c = float(np.mean(self.well.d2W(u)))
        if c < 0.0 and not w > c * c / 4.0 + 0.25 * w:
            c = 0.0
        symbol = np.zeros_like(g.ksq)
        mask = g.ksq > 0
        symbol[mask] = 1.0 / (w + g.ksq[mask] * (g.ksq[mask] + c))
        return lambda r: g.apply_symbol(symbol, r)

    def solve_prox(self, w, anchor, guess, **tol):
        # start from a state with the anchor's mass so every iterate keeps it
        start = guess - np.mean(guess) + np.mean(anchor)
        res = default_prox(self, w, anchor, start, **tol)
        m0, m1 = self.mass(anchor), self.mass(res.u)
        if abs(m1 - m0) > self.mass_rtol * max(abs(m0), 1.0):
            raise MassDriftError(f"stage changed mass from {m0!r} to {m1!r}")
        return res

    def semi_implicit_split(self):
        g = self.grid
        return g.ksq ** 2, g.ksq, self.well.dW
