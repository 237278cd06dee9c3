import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minmove import builtin, collapse_anchors, default_prox, integrate, stage_solve, step
from minmove.flow import (
    EnergyIncreaseError,
    FlowError,
    FlowProblem,
    NonCoerciveStageError,
    ProxError,
    StageError,
    check_finite,
    tol_mono,
)


class Quadratic(FlowProblem):
    """E(u) = u.A u / 2 - b.u with A symmetric."""

    def __init__(self, A, b):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)

    def energy(self, u):
        return 0.5 * u @ self.A @ u - self.b @ u

    def gradient(self, u):
        return self.A @ u - self.b

    def hess_vec(self, u, v):
        return self.A @ v

    def exact_prox(self, w, a):
        return np.linalg.solve(self.A + w * np.eye(len(a)), self.b + w * a)


class QuarticWell(FlowProblem):
    """E(u) = sum (u^2 - 1)^2 / 4, nonconvex near the origin."""

    def energy(self, u):
        return 0.25 * float(np.sum((u * u - 1.0) ** 2))

    def gradient(self, u):
        return u ** 3 - u


def random_spd(rng, n):
    Q = rng.normal(size=(n, n))
    return Q @ Q.T + 0.1 * np.eye(n)


def scalar_recurrence(gamma, lam, k, u0=1.0):
    """One multi-stage step of u' = -lam u, stage by stage."""
    G = gamma.as_float()
    U = [u0]
    for m in range(G.shape[0]):
        row = G[m, : m + 1]
        U.append(float(row @ np.array(U)) / (row.sum() + k * lam))
    return U[-1]


def test_collapse_weights_and_anchor():
    W, a = collapse_anchors([2.0, 3.0, -1.0], [np.array([1.0]), np.array([2.0]), np.array([4.0])])
    assert W == 4.0
    assert a[0] == pytest.approx((2 * 1 + 3 * 2 - 4) / 4)


def test_collapse_rejects_nonpositive_total():
    with pytest.raises(NonCoerciveStageError):
        collapse_anchors([1.0, -1.0], [np.zeros(2), np.ones(2)])
    with pytest.raises(ValueError):
        collapse_anchors([1.0], [np.zeros(2), np.ones(2)])


def test_collapse_matches_multi_anchor_minimizer():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n, p = 4, 3
        prob = Quadratic(random_spd(rng, n), rng.normal(size=n))
        weights = rng.uniform(0.5, 3.0, size=p)
        anchors = [rng.normal(size=n) for _ in range(p)]
        # direct minimizer of E + sum w_i/2 |u - a_i|^2
        direct = np.linalg.solve(prob.A + weights.sum() * np.eye(n), prob.b + sum(w * a for w, a in zip(weights, anchors)))
        W, a = collapse_anchors(weights, anchors)
        assert np.allclose(prob.exact_prox(W, a), direct, rtol=0, atol=1e-12)


def test_default_prox_quadratic():
    rng = np.random.default_rng(2)
    prob = Quadratic(random_spd(rng, 6), rng.normal(size=6))
    a = rng.normal(size=6)
    res = default_prox(prob, 0.7, a, a)
    assert np.allclose(res.u, prob.exact_prox(0.7, a), atol=1e-12)
    assert res.residual <= 1e-12 * (0.7 * np.linalg.norm(a) + np.linalg.norm(prob.gradient(a)) + 1)


def test_default_prox_rejects_nonpositive_weight():
    prob = Quadratic(np.eye(2), np.zeros(2))
    with pytest.raises(NonCoerciveStageError):
        default_prox(prob, 0.0, np.zeros(2), np.zeros(2))


def test_default_prox_nonconvex_decreases_objective():
    prob = QuarticWell()
    a = np.array([0.05, -0.3, 1.4, 0.0])
    w = 0.2
    phi = lambda u: prob.energy(u) + 0.5 * w * float(np.sum((u - a) ** 2))
    res = default_prox(prob, w, a, a)
    assert phi(res.u) <= phi(a)
    assert np.linalg.norm(w * (res.u - a) + prob.gradient(res.u)) < 1e-10


def test_default_prox_reports_failure():
    prob = QuarticWell()
    a = np.array([3.0, -2.0])
    with pytest.raises(ProxError) as info:
        default_prox(prob, 1e-3, a, a, max_newton=1)
    assert len(info.value.history) == 2


def test_fd_hessian_action():
    prob = QuarticWell()
    rng = np.random.default_rng(3)
    u, v = rng.normal(size=5), rng.normal(size=5)
    assert np.allclose(prob.hess_vec(u, v), (3 * u ** 2 - 1) * v, rtol=1e-6, atol=1e-8)


def test_backward_euler_reduction():
    rng = np.random.default_rng(4)
    prob = Quadratic(random_spd(rng, 5), rng.normal(size=5))
    u0, k = rng.normal(size=5), 0.3
    u1, trace = step(prob, builtin("backward_euler"), u0, k)
    assert np.allclose(u1, prob.exact_prox(1.0 / k, u0), atol=1e-12)
    assert len(trace.stage_states) == 2


@pytest.mark.parametrize("name", ["second_order_a", "second_order_b", "third_order"])
def test_diagonal_quadratic_matches_scalar_recurrence(name):
    lams = np.array([0.1, 1.0, 10.0, 250.0])
    prob = Quadratic(np.diag(lams), np.zeros(4))
    u1, _ = step(prob, builtin(name), np.ones(4), 0.05)
    expect = [scalar_recurrence(builtin(name), lam, 0.05) for lam in lams]
    assert np.allclose(u1, expect, rtol=1e-12, atol=1e-14)


def test_stage_solve_collapses_limiters():
    rng = np.random.default_rng(5)
    prob = Quadratic(random_spd(rng, 3), rng.normal(size=3))
    states = [rng.normal(size=3), rng.normal(size=3)]
    row, k = [-2.0, 6.0], 0.1
    res = stage_solve(prob, row, k, states, states[-1])
    W, a = collapse_anchors([r / k for r in row], states)
    assert np.allclose(res.u, prob.exact_prox(W, a), atol=1e-12)
    with pytest.raises(ValueError):
        stage_solve(prob, row, 0.0, states, states[-1])


def test_stage_error_wraps_noncoercive_stage():
    prob = Quadratic(np.eye(2), np.zeros(2))
    bad = np.array([[1.0, 0.0], [2.0, -3.0]])
    with pytest.raises(StageError) as info:
        step(prob, bad, np.ones(2), 0.1)
    assert info.value.stage == 2


def test_integrate_monotone_and_accurate():
    prob = Quadratic(np.diag([1.0, 4.0]), np.zeros(2))
    tr = integrate(prob, builtin("third_order"), np.array([1.0, 1.0]), 1.0 / 32, 32)
    assert tr.monotone and not tr.violations
    assert np.all(np.diff(tr.energies) <= 0)
    assert np.allclose(tr.final, np.exp(-np.array([1.0, 4.0])), atol=1e-5)
    assert len(tr.states) == 33 and tr.times[-1] == pytest.approx(1.0)


class Liar(FlowProblem):
    """A prox that always moves uphill, to exercise the monitor."""

    def energy(self, u):
        return float(u @ u)

    def gradient(self, u):
        return 2 * u

    def solve_prox(self, w, anchor, guess, **tol):
        from minmove.flow import ProxResult

        return ProxResult(1.5 * anchor)

    smooth = False


def test_energy_monitor():
    with pytest.raises(EnergyIncreaseError):
        integrate(Liar(), builtin("backward_euler"), np.ones(2), 0.1, 3)
    tr = integrate(Liar(), builtin("backward_euler"), np.ones(2), 0.1, 3, strict=False)
    assert [v[0] for v in tr.violations] == [1, 2, 3]
    assert not tr.monotone


def test_nan_screening():
    with pytest.raises(FlowError):
        check_finite(np.array([1.0, np.nan]), "test")
    assert tol_mono(-3.0) == pytest.approx(4e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_scalar_linear_step_is_contractive(lam, k):
    # certified schemes never amplify the linear decay mode, for any k
    for name in ("second_order_a", "third_order"):
        assert abs(scalar_recurrence(builtin(name), lam, k)) <= 1.0 + 1e-12
