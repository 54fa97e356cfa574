import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbqaoa.datasets import instance1_moments
from qbqaoa.exceptions import InfeasibleProblem
from qbqaoa.market import MarketMoments
from qbqaoa.problem import (
    IntegerModel,
    brute_force_stats,
    continuous_model,
    cost,
    count_feasible,
    discretize,
    enumerate_feasible,
    feasible_array,
    greedy_allocation,
    shift,
)


def random_model(rng, n=3, lo=-2, hi=3):
    A = rng.normal(size=(n, n))
    L = rng.integers(lo, 1, size=n)
    U = L + rng.integers(0, hi, size=n)
    D = int(rng.integers(L.sum(), U.sum() + 1))
    return IntegerModel(A @ A.T, rng.normal(size=n), L, U, D)


def test_cost_hand_values():
    m = IntegerModel(np.eye(2), np.zeros(2), [0, 0], [3, 3], 3)
    assert cost(m, [0, 0]) == 0
    assert cost(m, [1, 2]) == 5


def test_cost_matches_double_loop():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        A = rng.normal(size=(n, n))
        m = IntegerModel(A + A.T, rng.normal(size=n), [-5] * n, [5] * n, 0)
        x = rng.integers(-5, 6, size=n)
        ref = sum(m.sigma[i, j] * x[i] * x[j] for i in range(n) for j in range(n)) + sum(m.mu[i] * x[i] for i in range(n))
        assert cost(m, x) == pytest.approx(ref, abs=1e-12)


def test_discretize_instance1_bounds():
    m = discretize(instance1_moments(), 18.415, 0.5, -1, 1)
    assert m.D == 2
    assert np.all(m.L == -2) and np.all(m.U == 2)
    s = shift(m)
    assert s.D_hat == 14
    assert np.all(s.R == 4)


def test_discretize_zero_market():
    mm = MarketMoments(np.zeros(3), np.zeros((3, 3)), ("a", "b", "c"))
    m = discretize(mm, 1.0, 0.25, 0, 1)
    assert np.all(m.sigma == 0) and np.all(m.mu == 0)


def test_discretize_rejects_off_grid_bounds():
    with pytest.raises(ValueError):
        discretize(instance1_moments(), 1.0, 0.5, -0.7, 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 0.25, 0.1, 0.05]))
def test_discretize_matches_continuous_objective(seed, alpha):
    rng = np.random.default_rng(seed)
    moments = instance1_moments()
    q = float(rng.uniform(1, 30))
    m = discretize(moments, q, alpha, -1, 1)
    cm = continuous_model(moments, q, alpha, -1, 1)
    x = rng.integers(m.L, m.U + 1)
    w = alpha * x
    direct = 0.5 * q * w @ moments.covariance @ w - w @ moments.expectation
    assert cost(m, x) == pytest.approx(direct, abs=1e-12)
    assert cm.objective(w) == pytest.approx(direct, abs=1e-12)


def test_shift_zero_offset():
    m = IntegerModel(np.eye(2), np.array([1.0, -1.0]), [0, 0], [3, 4], 5)
    s = shift(m)
    assert np.array_equal(s.mu_hat, m.mu) and s.D_hat == 5 and np.array_equal(s.R, [3, 4])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_shift_constant(seed):
    m = random_model(np.random.default_rng(seed))
    s = shift(m)
    ys = feasible_array(s)
    diff = cost(m, ys + m.L) - s.cost(ys)
    assert np.var(diff) < 1e-18
    assert np.allclose(diff, s.constant, atol=1e-12)


def test_greedy_examples():
    assert greedy_allocation([4] * 6, 14).tolist() == [4, 4, 4, 2, 0, 0]
    assert greedy_allocation([4] * 6, 0).tolist() == [0] * 6
    assert greedy_allocation([5], 5).tolist() == [5]
    with pytest.raises(InfeasibleProblem):
        greedy_allocation([1, 1], 3)


def test_enumerate_examples():
    def shifted(R, D):
        n = len(R)
        return shift(IntegerModel(np.zeros((n, n)), np.zeros(n), [0] * n, R, D))

    assert len(list(enumerate_feasible(shifted([20, 20], 20)))) == 21
    assert [y.tolist() for y in enumerate_feasible(shifted([1, 1], 2))] == [[1, 1]]
    assert len(feasible_array(shifted([4] * 6, 14))) == count_feasible([4] * 6, 14)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=4), st.integers(0, 16))
def test_enumerate_matches_product_filter(R, D):
    n = len(R)
    if D > sum(R):
        return
    s = shift(IntegerModel(np.zeros((n, n)), np.zeros(n), [0] * n, R, D))
    got = [tuple(y) for y in enumerate_feasible(s)]
    ref = [y for y in itertools.product(*(range(r + 1) for r in R)) if sum(y) == D]
    assert got == ref
    assert count_feasible(R, D) == len(ref)


def test_brute_force_examples():
    m = IntegerModel(np.eye(2), np.zeros(2), [0, 0], [1, 1], 1)
    st_ = brute_force_stats(shift(m), m)
    assert st_.best == st_.worst == st_.uniform_mean == 1
    one = IntegerModel(np.eye(2), np.ones(2), [0, 0], [1, 1], 2)
    st1 = brute_force_stats(shift(one), one)
    assert st1.best == st1.worst == st1.uniform_mean == 4


def test_brute_force_matches_direct_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = random_model(rng)
        s = shift(m)
        stats = brute_force_stats(s, m)
        xs = [np.array(x) for x in itertools.product(*(range(l, u + 1) for l, u in zip(m.L, m.U))) if sum(x) == m.D]
        costs = np.array([cost(m, x) for x in xs])
        assert stats.best == pytest.approx(costs.min(), abs=1e-12)
        assert stats.worst == pytest.approx(costs.max(), abs=1e-12)
        assert stats.uniform_mean == pytest.approx(costs.mean(), abs=1e-12)
        assert stats.best == pytest.approx(s.absolute_cost(stats.argmin - s.offset), abs=1e-12)


def test_infeasible_model_rejected():
    with pytest.raises(InfeasibleProblem):
        IntegerModel(np.eye(2), np.zeros(2), [0, 0], [1, 1], 3)


def test_model_json_round_trip():
    m = random_model(np.random.default_rng(2))
    back = IntegerModel.from_json(m.to_json())
    assert np.array_equal(back.sigma, m.sigma) and back.D == m.D
