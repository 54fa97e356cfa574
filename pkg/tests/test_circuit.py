import functools
import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qbqaoa.circuit import (
    QaoaCircuit,
    apply_mixing_layer,
    apply_phase,
    apply_xy,
    apply_xyy,
    check_norm,
    initial_state,
    mixing_schedule,
    precompute_diagonal,
    schedule_depth,
    support_sums,
)
from qbqaoa.encoding import QubitLayout, build_layout, qubit_sums
from qbqaoa.exceptions import NormDrift
from qbqaoa.problem import IntegerModel, greedy_allocation

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0])


def embed(ops, n):
    """Tensor product with ``ops[q]`` on qubit ``q``; qubit 0 is the rightmost factor."""
    return functools.reduce(np.kron, [ops.get(q, I2) for q in reversed(range(n))])


def xy_hamiltonian(n, a, b):
    return embed({a: X, b: X}, n) + embed({a: Y, b: Y}, n)


def xyy_hamiltonian(n, i, j, k):
    H = np.zeros((1 << n, 1 << n), dtype=complex)
    for sign, (p, q, r) in [(-1, (X, Y, Y)), (1, (X, X, X)), (1, (Y, X, Y)), (1, (Y, Y, X))]:
        H += sign * embed({i: p, j: q, k: r}, n)
    return H


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def test_xy_matches_expm():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        a, b = rng.choice(n, 2, replace=False)
        beta = rng.uniform(-np.pi, np.pi)
        psi = random_state(rng, n)
        ref = scipy.linalg.expm(-1j * beta * xy_hamiltonian(n, a, b)) @ psi
        worst = max(worst, np.abs(apply_xy(psi.copy(), a, b, beta) - ref).max())
    assert worst < 1e-12


def test_xyy_matches_expm():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 5))
        i, j, k = rng.choice(n, 3, replace=False)
        beta = rng.uniform(-np.pi, np.pi)
        psi = random_state(rng, n)
        ref = scipy.linalg.expm(-1j * beta * xyy_hamiltonian(n, i, j, k)) @ psi
        worst = max(worst, np.abs(apply_xyy(psi.copy(), i, j, k, beta) - ref).max())
    assert worst < 1e-12


def test_xy_quarter_turn_swaps():
    psi = np.zeros(4, dtype=complex)
    psi[0b10] = 1  # qubit 1 set: |0_a 1_b> with a=0, b=1
    out = apply_xy(psi, 0, 1, np.pi / 4)
    assert np.allclose(out, [0, -1j, 0, 0])


def test_xyy_leaves_000_and_111():
    H = xyy_hamiltonian(3, 0, 1, 2)
    assert abs(H[0b111, 0b000]) < 1e-15
    for z in (0b000, 0b111):
        psi = np.zeros(8, dtype=complex)
        psi[z] = 1
        assert np.allclose(apply_xyy(psi, 0, 1, 2, 0.7), psi)


def test_zero_angle_is_identity():
    psi = random_state(np.random.default_rng(2), 4)
    assert np.allclose(apply_xy(psi.copy(), 0, 3, 0.0), psi)
    assert np.allclose(apply_xyy(psi.copy(), 2, 0, 1, 0.0), psi)


def test_xyy_value_check():
    layout = QubitLayout.from_values([1, 1, 4])
    with pytest.raises(ValueError):
        apply_xyy(np.eye(8, dtype=complex)[0], 2, 0, 1, 0.1, layout=layout)


def pauli_z_diagonal(model, layout):
    """Cost diagonal rebuilt from the b = (1 - z)/2 substitution with explicit Z tensors."""
    n = layout.n_qubits
    W = layout.weight_matrix().T.astype(float)  # assets x qubits
    c0 = model.L + W.sum(axis=1) / 2
    A = -W / 2
    const = c0 @ model.sigma @ c0 + model.mu @ c0
    h = (2 * model.sigma @ c0 + model.mu) @ A
    J = A.T @ model.sigma @ A
    zdiag = [np.diag(embed({m: Z}, n)).real for m in range(n)]
    diag = np.full(1 << n, const + np.trace(J))
    for m in range(n):
        diag += h[m] * zdiag[m]
    for m, k in itertools.combinations(range(n), 2):
        diag += 2 * J[m, k] * zdiag[m] * zdiag[k]
    return diag


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_diagonal_matches_pauli_expansion(seed):
    rng = np.random.default_rng(seed)
    layout = build_layout([3, 2, 4])
    n = len(layout.R)
    A = rng.normal(size=(n, n))
    L = rng.integers(-3, 1, size=n)
    U = L + np.array(layout.R)
    model = IntegerModel(A @ A.T, rng.normal(size=n), L, U, int(L.sum()))
    diag = precompute_diagonal(model, layout).values
    assert np.abs(diag - pauli_z_diagonal(model, layout)).max() < 1e-10


def test_diagonal_on_eight_qubits():
    layout = build_layout([4, 4, 3])
    assert layout.n_qubits == 8
    rng = np.random.default_rng(7)
    A = rng.normal(size=(3, 3))
    model = IntegerModel(A + A.T, rng.normal(size=3), [-1, 0, -2], [3, 4, 1], 0)
    diag = precompute_diagonal(model, layout).values
    assert np.abs(diag - pauli_z_diagonal(model, layout)).max() < 1e-10


def test_diagonal_toy():
    layout = QubitLayout.from_values([1, 1], asset=[0, 1])
    model = IntegerModel(np.eye(2), np.zeros(2), [0, 0], [1, 1], 1)
    assert precompute_diagonal(model, layout).values.tolist() == [0, 1, 1, 2]


def test_phase_matches_expm():
    rng = np.random.default_rng(3)
    layout = build_layout([2, 1])
    model = IntegerModel(np.eye(2), np.ones(2), [0, 0], [2, 1], 1)
    diag = precompute_diagonal(model, layout, eta=0.7)
    psi = random_state(rng, layout.n_qubits)
    ref = scipy.linalg.expm(-1j * 0.4 * 0.7 * np.diag(diag.values)) @ psi
    assert np.abs(apply_phase(psi.copy(), diag, 0.4) - ref).max() < 1e-12
    assert np.allclose(apply_phase(psi.copy(), diag, 0.0), psi)


def test_sum_conservation_demo():
    layout = QubitLayout.from_values([1, 1, 1, 2, 2, 4])
    psi = np.zeros(64, dtype=complex)
    psi[1 << 5] = 1  # the 4-valued qubit
    out = apply_mixing_layer(psi, layout, 0.3)
    probs = np.abs(out) ** 2
    sums = qubit_sums(layout, np.arange(64))
    assert probs[sums != 4].sum() == 0.0
    assert np.count_nonzero(probs[sums == 4] > 0.01) >= 2


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=2, max_size=3), st.floats(-np.pi, np.pi))
def test_layer_preserves_support(R, beta):
    layout = build_layout(R)
    if layout.n_qubits > 14 or sum(R) == 0:
        return
    D = sum(R) // 2
    psi = initial_state(layout, greedy_allocation(R, D), D)
    out = apply_mixing_layer(psi, layout, beta)
    assert support_sums(layout, out).tolist() == [D]
    check_norm(out)


def test_identity_layer_without_partners():
    layout = QubitLayout.from_values([1, 2], asset=[0, 1])
    assert mixing_schedule(layout) == []


def test_schedule_instance1():
    layout = build_layout([4] * 6)
    gates = mixing_schedule(layout)
    assert len(gates) == 30
    vals = layout.value
    for g in gates:
        if g.kind == "xy":
            assert vals[g.qubits[0]] == vals[g.qubits[1]]
        else:
            assert vals[g.qubits[0]] == 2 * vals[g.qubits[1]] == 2 * vals[g.qubits[2]]
    assert schedule_depth(gates) <= len(gates)


def test_norm_drift_detected():
    with pytest.raises(NormDrift):
        check_norm(np.array([1.0, 0.1]))


def test_subspace_matches_dense():
    rng = np.random.default_rng(4)
    layout = build_layout([3, 4, 2])
    n = 3
    A = rng.normal(size=(n, n))
    model = IntegerModel(A @ A.T, rng.normal(size=n), [-1, -1, 0], [2, 3, 2], 3)
    gammas, betas = rng.normal(size=3), rng.normal(size=3)
    sub = QaoaCircuit(model, layout)
    dense = QaoaCircuit(model, layout, dense=True)
    y0 = greedy_allocation(np.array([3, 4, 2]), 5)
    a = sub.to_dense(sub.evolve(gammas, betas, y0))
    b = dense.evolve(gammas, betas, y0)
    ref = initial_state(layout, y0, 5)
    diag = precompute_diagonal(model, layout)
    for g, be in zip(gammas, betas):
        apply_phase(ref, diag, g)
        apply_mixing_layer(ref, layout, be)
    assert np.abs(a - ref).max() < 1e-12
    assert np.abs(b - ref).max() < 1e-12


def test_numba_kernel_matches_numpy_path():
    rng = np.random.default_rng(5)
    layout = build_layout([4] * 4)
    model = IntegerModel(np.eye(4), rng.normal(size=4), [-2] * 4, [2] * 4, 0)
    c = QaoaCircuit(model, layout, eta=0.3)
    y0 = greedy_allocation(np.full(4, 4), 8)
    gammas, betas = rng.normal(size=4), rng.normal(size=4)
    x = c.initial(y0)
    for g, b in zip(gammas, betas):
        c.mix(c.phase(x, g), b)
    assert np.abs(c.evolve(gammas, betas, y0) - x).max() < 1e-12


def test_initial_state_examples():
    layout = build_layout([4] * 6)
    psi = initial_state(layout, greedy_allocation([4] * 6, 14), 14)
    z = int(np.flatnonzero(psi)[0])
    bits = [(z >> m) & 1 for m in range(18)]
    assert bits == [1, 1, 1] * 3 + [0, 0, 1] + [0] * 6
    assert initial_state(layout, np.zeros(6, int))[0] == 1
    two = build_layout([20, 20])
    assert np.count_nonzero(initial_state(two, [20, 0])) == 1
