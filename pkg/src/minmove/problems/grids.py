"""Spatial grids and the double-well potentials."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sfft
from scipy.linalg import solve_banded

__all__ = ["PeriodicGrid", "DirichletGrid1D", "DoubleWell"]


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic grid on ``[-L, L)^dim`` with ``N`` points per axis.

    Transforms are real FFTs over the last ``dim`` axes. Wavenumbers are
    ``pi * m / L`` for ``m`` in ``[-N/2, N/2)``.
    """

    dim: int
    N: int
    L: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell(self) -> float:
        return self.dx ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.dim

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        if self.dim == 1:
            return (self.x,)
        return tuple(np.meshgrid(self.x, self.x, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        full = np.pi * np.fft.fftfreq(self.N, d=1.0 / self.N) / self.L
        half = np.pi * np.fft.rfftfreq(self.N, d=1.0 / self.N) / self.L
        if self.dim == 1:
            return (half,)
        return (full[:, None], half[None, :])

    @cached_property
    def ksq(self) -> np.ndarray:
        """``|xi|^2`` on the half spectrum."""
        out = sum(k ** 2 for k in self.wavenumbers)
        out = np.broadcast_to(out, self.spectral_shape).copy()
        out.setflags(write=False)
        return out

    @cached_property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.N,) * (self.dim - 1) + (self.N // 2 + 1,)

    def fft(self, u: np.ndarray) -> np.ndarray:
        return sfft.rfftn(u, axes=tuple(range(-self.dim, 0)))

    def ifft(self, uh: np.ndarray) -> np.ndarray:
        return sfft.irfftn(uh, s=self.shape, axes=tuple(range(-self.dim, 0)))

    def apply_symbol(self, symbol: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.ifft(symbol * self.fft(u))

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        return self.apply_symbol(-self.ksq, u)

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(f) * self.cell)

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.vdot(u, v).real * self.cell)


@dataclass(frozen=True)
class DirichletGrid1D:
    """``N`` interior points on ``[-L, L]`` with fixed end values.

    ``laplacian="spectral"`` applies a sine-series (DST-I) Laplacian to
    ``u - lift``, where ``lift`` is the linear interpolant of the boundary
    values; ``"fd"`` is the three-point central difference with the boundary
    values as ghost points.
    """

    N: int
    L: float = 10.0
    left: float = -1.0
    right: float = 1.0
    laplacian_kind: str = "spectral"

    def __post_init__(self):
        if self.N < 3:
            raise ValueError("need at least 3 interior points")
        if self.laplacian_kind not in ("spectral", "fd"):
            raise ValueError("laplacian_kind must be 'spectral' or 'fd'")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.N + 1)

    @property
    def cell(self) -> float:
        return self.dx

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(1, self.N + 1)

    @cached_property
    def lift(self) -> np.ndarray:
        return self.left + (self.right - self.left) * (self.x + self.L) / (2.0 * self.L)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of ``-Laplacian`` on the zero-boundary subspace."""
        j = np.arange(1, self.N + 1)
        if self.laplacian_kind == "spectral":
            return (np.pi * j / (2.0 * self.L)) ** 2
        return (2.0 / self.dx * np.sin(np.pi * j / (2.0 * (self.N + 1)))) ** 2

    def sine(self, v: np.ndarray) -> np.ndarray:
        return sfft.dst(v, type=1, norm="ortho")

    def neg_laplacian0(self, v: np.ndarray) -> np.ndarray:
        """``-Laplacian`` with zero boundary values."""
        if self.laplacian_kind == "spectral":
            return self.sine(self.eigenvalues * self.sine(v))
        out = 2.0 * v
        out[1:] -= v[:-1]
        out[:-1] -= v[1:]
        return out / self.dx ** 2

    def neg_laplacian(self, u: np.ndarray) -> np.ndarray:
        """``-Laplacian`` including the boundary values."""
        if self.laplacian_kind == "spectral":
            # the linear lift is harmonic
            return self.neg_laplacian0(u - self.lift)
        out = self.neg_laplacian0(u)
        out[0] -= self.left / self.dx ** 2
        out[-1] -= self.right / self.dx ** 2
        return out

    def dirichlet_energy(self, u: np.ndarray) -> float:
        """``(1/2) int |u_x|^2`` in the grid's own discretization."""
        if self.laplacian_kind == "spectral":
            v = u - self.lift
            slope = (self.right - self.left) / (2.0 * self.L)
            return 0.5 * self.dx * float(v @ self.neg_laplacian0(v)) + self.L * slope ** 2
        full = np.concatenate(([self.left], u, [self.right]))
        return 0.5 * float(np.sum(np.diff(full) ** 2)) / self.dx

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(u @ v) * self.dx

    def solve_shifted(self, shift: float, rhs: np.ndarray, diag=None) -> np.ndarray:
        """Solve ``(shift + diag - Laplacian0) x = rhs``.

        Spectral: ``diag`` must be a scalar (or ``None``). FD: any diagonal,
        solved by banded elimination.
        """
        if self.laplacian_kind == "spectral":
            c = shift + (0.0 if diag is None else float(diag))
            return self.sine(self.sine(rhs) / (c + self.eigenvalues))
        d = np.full(self.N, shift + 2.0 / self.dx ** 2)
        if diag is not None:
            d = d + diag
        ab = np.empty((3, self.N))
        ab[0, 0] = ab[2, -1] = 0.0
        ab[0, 1:] = ab[2, :-1] = -1.0 / self.dx ** 2
        ab[1] = d
        return solve_banded((1, 1), ab, rhs)


@dataclass(frozen=True)
class DoubleWell:
    """``unequal``: ``8u - 16u^2 - (8/3)u^3 + 8u^4``; ``equal``: ``u^2 (1-u)^2``."""

    variant: str = "equal"

    def __post_init__(self):
        if self.variant not in ("equal", "unequal"):
            raise ValueError("variant must be 'equal' or 'unequal'")

    def W(self, u):
        if self.variant == "unequal":
            return u * (8.0 + u * (-16.0 + u * (-8.0 / 3.0 + 8.0 * u)))
        return u * u * (1.0 - u) ** 2

    def dW(self, u):
        if self.variant == "unequal":
            return 8.0 + u * (-32.0 + u * (-8.0 + 32.0 * u))
        return 2.0 * u * (1.0 - u) * (1.0 - 2.0 * u)

    def d2W(self, u):
        if self.variant == "unequal":
            return -32.0 + u * (-16.0 + 96.0 * u)
        return 2.0 + u * (-12.0 + 12.0 * u)

    @property
    def min_curvature(self) -> float:
        return -(32.0 + 2.0 / 3.0) if self.variant == "unequal" else -1.0
