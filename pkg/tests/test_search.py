import numpy as np
import pytest

from minmove import builtin, certify, compute_auxiliaries, compute_betas
from minmove.search import (
    SearchConfig,
    betas_float,
    find_scheme,
    objective,
    rationalize,
    stability_diagonal_float,
)


def test_objective_zero_on_known_schemes():
    assert objective(builtin("second_order_a").as_float(), 2) == pytest.approx(0.0, abs=1e-28)
    assert objective(builtin("third_order").as_float(), 3) == pytest.approx(0.0, abs=1e-24)
    assert objective([[1.0]], 1) == 0.0
    # beta1 = 1/2 for gamma = [[2]]
    assert objective([[2.0]], 1) == pytest.approx(0.25)
    assert objective(np.array([[1.0, 0.0], [1.0, -1.0]]), 2) == np.inf


def test_float_recursions_agree_with_exact():
    for name in ("second_order_a", "second_order_b", "third_order"):
        g = builtin(name)
        G = g.as_float()
        exact_diag = [float(d) for d in compute_auxiliaries(g).diagonal]
        assert np.allclose(stability_diagonal_float(G), exact_diag, rtol=1e-10)
        assert np.allclose(betas_float(G), [float(b) for b in compute_betas(g).final], rtol=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(0)
    with pytest.raises(ValueError):
        SearchConfig(3, target_order=4)
    with pytest.raises(ValueError):
        SearchConfig(3, eps=0.0)


def test_rationalize_hits_conditions_exactly():
    G = builtin("second_order_a").as_float() + 1e-4
    for cand in rationalize(G, 2, 100):
        assert certify(cand, 2).report.achieved_order >= 2
        break
    else:
        pytest.fail("no rational candidate produced")


def test_backward_euler_found():
    res = find_scheme(SearchConfig(1, 1, seed=0))
    assert res.certified
    assert certify(res.gamma_rational, 1).verdict


def test_three_stage_second_order_found_and_certified():
    res = find_scheme(SearchConfig(3, 2, seed=0))
    assert res.certified and res.feasible
    assert certify(res.gamma_rational, 2).verdict
    assert np.all(stability_diagonal_float(res.gamma_float) >= 1e-2)
    data = res.to_json()
    assert data["certified"] is True and len(data["gamma"]) == 3


def test_two_stage_second_order_impossible():
    res = find_scheme(SearchConfig(2, 2, seed=0, n_starts=4))
    assert not res.certified
    assert res.gamma_rational is None
    assert res.objective > 1e-6


def test_search_is_deterministic():
    a = find_scheme(SearchConfig(3, 2, seed=3, n_starts=2))
    b = find_scheme(SearchConfig(3, 2, seed=3, n_starts=2))
    assert a.to_json() == b.to_json()
