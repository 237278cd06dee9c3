import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from minmove import builtin, integrate, step
from minmove.problems import (
    PROBLEMS,
    AllenCahn1D,
    DirichletGrid1D,
    DoubleWell,
    PeriodicGrid,
    get_problem,
    pde_allen_cahn_2d,
    pde_cahn_hilliard_2d,
    pde_heat,
    prox_nonsmooth,
    reference_semi_implicit,
    scalar_prox_cosh,
)


def fd_directional(problem, u, v, h=1e-6):
    return (problem.energy(u + h * v) - problem.energy(u - h * v)) / (2 * h)


def smooth_perturbation(problem, rng):
    """A smooth random direction compatible with the problem's boundary conditions."""
    if hasattr(problem, "grid") and isinstance(problem.grid, PeriodicGrid):
        g = problem.grid
        white = rng.normal(size=g.shape)
        v = g.apply_symbol(np.exp(-g.ksq), white)
        return problem.project(v / np.max(np.abs(v)))
    if hasattr(problem, "grid"):
        x, L = problem.grid.x, problem.grid.L
        c = rng.normal(size=4)
        return sum(cj * np.sin((j + 1) * np.pi * (x + L) / (2 * L)) for j, cj in enumerate(c))
    return rng.normal(size=1)


@pytest.mark.parametrize(
    "name, params",
    [
        ("ode_cosh", {}),
        ("pde_heat", {"N": 64}),
        ("pde_allen_cahn_1d", {"N": 255}),
        ("pde_allen_cahn_1d", {"N": 255, "laplacian": "fd"}),
        ("pde_allen_cahn_2d", {"N": 32}),
        ("pde_cahn_hilliard_2d", {"N": 32}),
    ],
)
def test_gradient_consistency(name, params):
    p = get_problem(name, **params)
    rng = np.random.default_rng(0)
    for _ in range(5):
        u = p.initial_state() + 0.1 * smooth_perturbation(p, rng)
        v = smooth_perturbation(p, rng)
        fd = fd_directional(p, u, v)
        an = p.inner(p.gradient(u), v)
        assert abs(fd - an) <= 1e-6 * max(abs(an), 1e-3)


def test_registry():
    assert set(PROBLEMS) == {
        "ode_cosh", "ode_nonsmooth", "pde_heat",
        "pde_allen_cahn_1d", "pde_allen_cahn_2d", "pde_cahn_hilliard_2d",
    }
    with pytest.raises(KeyError):
        get_problem("pde_navier_stokes")


# scalar ODEs


def test_cosh_exact_solution():
    p = get_problem("ode_cosh")
    assert p.exact(0.0)[0] == pytest.approx(-2.0, abs=1e-15)
    # u' = -sinh(u) by central difference
    t, h = 0.7, 1e-5
    du = (p.exact(t + h) - p.exact(t - h)) / (2 * h)
    assert du[0] == pytest.approx(-math.sinh(p.exact(t)[0]), rel=1e-8)
    # the closed form -2 acoth(e^t coth 1)
    assert p.exact(t)[0] == pytest.approx(-2 * math.atanh(1 / (math.exp(t) / math.tanh(1.0))), rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e4), st.floats(-20.0, 20.0))
def test_cosh_prox_against_bisection(w, a):
    f = lambda u: w * (u - a) + math.sinh(u)
    lo, hi = min(a, 0.0), max(a, 0.0)
    oracle = 0.0 if lo == hi else brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    u, _ = scalar_prox_cosh(w, a)
    assert abs(u - oracle) <= 1e-12 * max(1.0, abs(oracle))


def test_nonsmooth_energy_and_prox():
    p = get_problem("ode_nonsmooth")
    E = lambda u: p.energy(np.array([u]))
    assert E(0.5) == pytest.approx(0.25)
    assert E(2.0) == pytest.approx(1.5)
    assert E(-1.0) == pytest.approx(0.5)
    assert E(-1.0 - 1e-12) == pytest.approx(2.5)
    assert prox_nonsmooth(3.0, 0.0) == 0.0
    k = 0.1
    assert prox_nonsmooth(1 / k, 2.0) == pytest.approx(2.0 - k)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 50.0), st.floats(-4.0, 4.0))
def test_nonsmooth_prox_is_global_minimizer(w, a):
    p = get_problem("ode_nonsmooth")
    xs = np.linspace(-6, 6, 6001)
    u = prox_nonsmooth(w, a)
    obj = lambda x: p.energy(np.array([x])) + 0.5 * w * (x - a) ** 2
    assert obj(u) <= min(obj(x) for x in xs) + 1e-12


def test_nonsmooth_exact_solution():
    assert get_problem("ode_nonsmooth").exact(0.0)[0] == pytest.approx(math.pi / 2)
    p = get_problem("ode_nonsmooth", u0=2.0)
    assert p.exact(0.0)[0] == 2.0
    assert p.exact(0.5)[0] == pytest.approx(1.5)
    assert p.exact(1.0)[0] == pytest.approx(1.0)
    assert p.exact(1.5)[0] == pytest.approx(0.75)
    assert p.exact(3.5)[0] == pytest.approx(0.0)


# grids and wells


@pytest.mark.parametrize("dim", [1, 2])
def test_periodic_grid(dim):
    g = PeriodicGrid(dim, 32, 10.0)
    assert g.dx == pytest.approx(20 / 32)
    rng = np.random.default_rng(1)
    u = rng.normal(size=g.shape)
    assert np.allclose(g.ifft(g.fft(u)), u, rtol=0, atol=1e-12 * np.max(np.abs(u)))
    # last axis holds the half spectrum 0..N/2, others the full -N/2..N/2-1
    half = np.round(g.wavenumbers[-1] * g.L / np.pi)
    assert half.min() == 0 and half.max() == 16
    if dim == 2:
        full = np.round(g.wavenumbers[0] * g.L / np.pi)
        assert full.min() == -16 and full.max() == 15
    # Laplacian of a resolved Fourier mode
    X = g.coords[0]
    assert np.allclose(g.laplacian(np.cos(3 * np.pi * X / g.L)), -(3 * np.pi / g.L) ** 2 * np.cos(3 * np.pi * X / g.L))
    with pytest.raises(ValueError):
        PeriodicGrid(dim, 30, 1.0)


@pytest.mark.parametrize("kind", ["spectral", "fd"])
def test_dirichlet_grid(kind):
    g = DirichletGrid1D(127, 10.0, -1.0, 1.0, kind)
    assert g.dx == pytest.approx(20 / 128)
    # the linear lift has zero Laplacian and carries the boundary values
    assert np.allclose(g.neg_laplacian(g.lift), 0.0, atol=1e-10)
    mode = np.sin(np.pi * (g.x + 10) / 20)
    lap = g.neg_laplacian0(mode)
    lam = (np.pi / 20) ** 2 if kind == "spectral" else (2 / g.dx * np.sin(np.pi * g.dx / 40)) ** 2
    assert np.allclose(lap, lam * mode, atol=1e-10)
    rhs = np.cos(g.x)
    sol = g.solve_shifted(2.0, rhs)
    assert np.allclose(2.0 * sol + g.neg_laplacian0(sol), rhs, atol=1e-10)


@pytest.mark.parametrize("variant", ["unequal", "equal"])
def test_double_well_derivatives(variant):
    W = DoubleWell(variant)
    u = np.linspace(-1.5, 1.5, 31)
    h = 1e-6
    assert np.allclose((W.W(u + h) - W.W(u - h)) / (2 * h), W.dW(u), rtol=1e-7, atol=1e-6)
    assert np.allclose((W.dW(u + h) - W.dW(u - h)) / (2 * h), W.d2W(u), rtol=1e-7, atol=1e-6)


def test_unequal_well_fixed_points():
    W = DoubleWell("unequal")
    assert W.dW(np.array([1.0, -1.0])) == pytest.approx([0.0, 0.0])
    assert W.W(np.array([1.0]))[0] != W.W(np.array([-1.0]))[0]


# heat


def test_heat_exact_and_constant_state():
    p = pde_heat(N=64)
    assert np.allclose(p.exact(0.0), np.sin(np.pi * p.grid.x))
    c = np.full(p.grid.shape, 0.3)
    u1, _ = step(p, builtin("third_order"), c, 0.1)
    assert np.allclose(u1, c, atol=1e-15)


@pytest.mark.parametrize("name", ["second_order_a", "third_order"])
def test_heat_step_matches_modewise_recurrence(name):
    p = pde_heat(N=64)
    rng = np.random.default_rng(2)
    u0 = p.grid.apply_symbol(np.exp(-0.01 * p.grid.ksq), rng.normal(size=p.grid.shape))
    k = 0.01
    u1, _ = step(p, builtin(name), u0, k)
    G = builtin(name).as_float()
    U = [p.grid.fft(u0)]
    for m in range(G.shape[0]):
        row = G[m, : m + 1]
        U.append(sum(r * Ui for r, Ui in zip(row, U)) / (row.sum() + k * p.grid.ksq))
    expect = p.grid.ifft(U[-1])
    assert np.max(np.abs(u1 - expect)) <= 1e-13 * np.max(np.abs(u0))


# Allen-Cahn


def test_allen_cahn_1d_front_speed():
    p = AllenCahn1D(N=1023)
    n = 256
    tr = integrate(p, builtin("second_order_a"), p.initial_state(), p.T / n, n)
    mask = tr.times >= 1.0
    fronts = [p.front_position(u) for u, keep in zip(tr.states, mask) if keep]
    speed = np.polyfit(tr.times[mask], fronts, 1)[0]
    assert speed == pytest.approx(2.0, rel=0.02)
    assert p.front_position(p.exact(0.0)) == pytest.approx(-5.0, abs=1e-3)


def test_allen_cahn_2d_keeps_symmetry():
    p = pde_allen_cahn_2d(N=32)
    u0 = p.initial_state()
    u1, _ = step(p, builtin("second_order_a"), u0, 1.0)
    assert np.allclose(u1, u1.T, atol=1e-12)
    flipped = np.roll(u1[::-1], 1, axis=0)
    assert np.allclose(u1, flipped, atol=1e-12)
    assert p.energy(u1) < p.energy(u0)


# Cahn-Hilliard


def test_cahn_hilliard_conserves_mass_each_step():
    p = pde_cahn_hilliard_2d(N=32)
    u = p.initial_state()
    m0 = p.mass(u)
    for _ in range(3):
        u, _ = step(p, builtin("third_order"), u, 2.0)
        assert abs(p.mass(u) - m0) <= 1e-10 * abs(m0)


def test_cahn_hilliard_constant_state_is_fixed():
    p = pde_cahn_hilliard_2d(N=16)
    c = np.full(p.grid.shape, 0.4)
    u1, _ = step(p, builtin("second_order_a"), c, 1.0)
    assert np.allclose(u1, c, atol=1e-14)
    assert p.mass(u1) == pytest.approx(p.mass(c), rel=1e-14)


def test_cahn_hilliard_inner_is_h_minus_one():
    p = pde_cahn_hilliard_2d(N=16)
    X, Y = p.grid.coords
    xi = np.pi / p.grid.L
    v = np.cos(xi * X)
    # (-Laplacian)^{-1} cos = cos / xi^2
    assert p.inner(v, v) == pytest.approx(p.grid.integrate(v * v) / xi ** 2, rel=1e-12)
    assert p.inner(np.ones_like(v), v) == pytest.approx(0.0, abs=1e-12)


def test_semi_implicit_reduces_to_heat():
    p = pde_heat(N=64)
    n = 64
    tr = reference_semi_implicit(p, p.T / n, n)
    err = p.error(tr.final, p.exact(p.T))
    # second order in time: halving k quarters the error
    tr2 = reference_semi_implicit(p, p.T / (2 * n), 2 * n)
    err2 = p.error(tr2.final, p.exact(p.T))
    assert 3.5 < err / err2 < 4.5
