"""Concrete gradient flows: two scalar ODEs and four PDE discretizations."""

from .allen_cahn import AllenCahn1D, AllenCahn2D
from .cahn_hilliard import CahnHilliard2D, MassDriftError
from .grids import DirichletGrid1D, DoubleWell, PeriodicGrid
from .heat import Heat1D
from .ode import CoshODE, NonsmoothODE, prox_nonsmooth, scalar_prox_cosh
from .reference import reference_semi_implicit

__all__ = [
    "AllenCahn1D",
    "AllenCahn2D",
    "CahnHilliard2D",
    "CoshODE",
    "DirichletGrid1D",
    "DoubleWell",
    "Heat1D",
    "MassDriftError",
    "NonsmoothODE",
    "PeriodicGrid",
    "PROBLEMS",
    "get_problem",
    "ode_cosh",
    "ode_nonsmooth",
    "pde_heat",
    "pde_allen_cahn_1d",
    "pde_allen_cahn_2d",
    "pde_cahn_hilliard_2d",
    "prox_nonsmooth",
    "reference_semi_implicit",
    "scalar_prox_cosh",
]


def ode_cosh(**kw):
    return CoshODE(**kw)


def ode_nonsmooth(**kw):
    return NonsmoothODE(**kw)


def pde_heat(N=256, L=1.0, **kw):
    return Heat1D(N=N, L=L, **kw)


def pde_allen_cahn_1d(N=2047, **kw):
    return AllenCahn1D(N=N, **kw)


def pde_allen_cahn_2d(N=256, L=10.0, **kw):
    return AllenCahn2D(N=N, L=L, **kw)


def pde_cahn_hilliard_2d(N=256, L=10.0, **kw):
    return CahnHilliard2D(N=N, L=L, **kw)


PROBLEMS = {
    "ode_cosh": ode_cosh,
    "ode_nonsmooth": ode_nonsmooth,
    "pde_heat": pde_heat,
    "pde_allen_cahn_1d": pde_allen_cahn_1d,
    "pde_allen_cahn_2d": pde_allen_cahn_2d,
    "pde_cahn_hilliard_2d": pde_cahn_hilliard_2d,
}


def get_problem(name: str, **params):
    """Build a problem by registry name; ``params`` go to its constructor."""
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}") from None
    return factory(**params)
