"""Allen-Cahn flows: the 1D traveling wave and the 2D shrinking disc."""

from __future__ import annotations

import numpy as np

from ..flow import FlowProblem
from .grids import DirichletGrid1D, DoubleWell, PeriodicGrid

__all__ = ["AllenCahn1D", "AllenCahn2D"]


def _l2_error(grid, u, v) -> float:
    d = np.asarray(u) - np.asarray(v)
    return float(np.sqrt(grid.inner(d, d)))


class AllenCahn1D(FlowProblem):
    """``u_t = u_xx - W'(u)`` on ``[-10, 10]`` with ``u(+-10) = +-1``.

    Unequal-depth well; the exact solution ``tanh(4x + 20 - 8t)`` travels
    with speed 2.
    """

    name = "pde_allen_cahn_1d"
    error_norm = "L2_grid"

    def __init__(self, N: int = 2047, L: float = 10.0, T: float = 5.0, laplacian: str = "spectral"):
        self.grid = DirichletGrid1D(N, L, -1.0, 1.0, laplacian)
        self.well = DoubleWell("unequal")
        self.T = float(T)

    def initial_state(self) -> np.ndarray:
        return self.exact(0.0)

    def exact(self, t: float) -> np.ndarray:
        return np.tanh(4.0 * self.grid.x + 20.0 - 8.0 * t)

    def inner(self, u, v):
        return self.grid.inner(u, v)

    def energy(self, u):
        return self.grid.dirichlet_energy(u) + self.grid.dx * float(np.sum(self.well.W(u)))

    def gradient(self, u):
        return self.grid.neg_laplacian(u) + self.well.dW(u)

    def hess_vec(self, u, v):
        return self.grid.neg_laplacian0(v) + self.well.d2W(u) * v

    def preconditioner(self, w, u):
        g = self.grid
        if g.laplacian_kind == "fd":
            diag = self.well.d2W(u)
            if np.all(w + diag > 0.0):
                return lambda r: g.solve_shifted(w, r, diag)
            return lambda r: g.solve_shifted(w, r)
        c = float(np.mean(self.well.d2W(u)))
        if not w + c > 0.25 * w:
            c = 0.0
        return lambda r: g.solve_shifted(w, r, c)

    def error(self, u, v) -> float:
        return _l2_error(self.grid, u, v)

    def front_position(self, u) -> float:
        """Zero crossing of ``u`` by linear interpolation."""
        x = self.grid.x
        idx = np.nonzero(np.diff(np.sign(u)) > 0)[0]
        if idx.size == 0:
            raise ValueError("state has no upward zero crossing")
        j = idx[0]
        return float(x[j] - u[j] * (x[j + 1] - x[j]) / (u[j + 1] - u[j]))


class _PeriodicPhaseField(FlowProblem):
    error_norm = "L2_grid"

    def __init__(self, N: int, L: float, T: float):
        self.grid = PeriodicGrid(2, N, L)
        self.well = DoubleWell("equal")
        self.T = float(T)

    def energy(self, u):
        g = self.grid
        return g.integrate(0.5 * u * (-g.laplacian(u)) + self.well.W(u))

    def chemical_potential(self, u):
        return -self.grid.laplacian(u) + self.well.dW(u)

    def error(self, u, v) -> float:
        return _l2_error(self.grid, u, v)


class AllenCahn2D(_PeriodicPhaseField):
    """L2 gradient flow of ``int |grad u|^2/2 + u^2 (1-u)^2`` on ``[-10, 10)^2``."""

    name = "pde_allen_cahn_2d"

    def __init__(self, N: int = 256, L: float = 10.0, T: float = 20.0):
        super().__init__(N, L, T)

    def initial_state(self) -> np.ndarray:
        X, Y = self.grid.coords
        return 1.0 / (1.0 + np.exp(-(7.5 - np.sqrt(X ** 2 + Y ** 2))))

    def inner(self, u, v):
        return self.grid.inner(u, v)

    def gradient(self, u):
        return self.chemical_potential(u)

    def hess_vec(self, u, v):
        return -self.grid.laplacian(v) + self.well.d2W(u) * v

    def preconditioner(self, w, u):
        g = self.grid
        c = float(np.mean(self.well.d2W(u)))
        if not w + c > 0.25 * w:
            c = 0.0
        symbol = 1.0 / (w + c + g.ksq)
        return lambda r: g.apply_symbol(symbol, r)

    def semi_implicit_split(self):
        g = self.grid
        return g.ksq, np.ones_like(g.ksq), self.well.dW
