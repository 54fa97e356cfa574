"""Statevector simulation of the quasi-binary QAOA circuit.

States are complex numpy vectors indexed by basis state, with qubit ``m``
as bit ``m`` of the index. Both mixer gates are 2x2 rotations on pairs of
basis states that carry the same encoded total, so they never move
amplitude out of a fixed-sum subspace:

* XY on ``(a, b)``: ``exp(-i beta (X_a X_b + Y_a Y_b))`` rotates
  ``|0_a 1_b>`` <-> ``|1_a 0_b>`` by ``2 beta``.
* XYY on ``(big, s1, s2)``: ``exp(-i beta (-XYY + XXX + YXY + YYX))``
  rotates ``|1_big 0_s1 0_s2>`` <-> ``|0_big 1_s1 1_s2>`` by ``4 beta``.

:class:`QaoaCircuit` runs the same kernels on the list of feasible basis
states only, which is what the optimizers use.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numba
import numpy as np

from .encoding import decode_index, encode_canonical, feasible_indices, qubit_sums
from .exceptions import CapExceeded, InfeasibleProblem, NormDrift
from .problem import cost

STATE_CAP = 26
NORM_TOL = 1e-9


class Gate(NamedTuple):
    kind: str  # "xy" or "xyy"
    qubits: tuple
    round: tuple  # (stage, exponent, round index) for schedule inspection


@dataclass(frozen=True)
class DiagonalCost:
    values: np.ndarray = field(repr=False)
    eta: float = 1.0

    def phases(self, gamma):
        return np.exp(-1j * gamma * self.eta * self.values)


def _check_qubits(n, *qubits):
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"gate qubits must be distinct, got {qubits}")


def n_qubits_of(state):
    size = state.shape[0]
    n = size.bit_length() - 1
    if size != 1 << n:
        raise ValueError(f"state length {size} is not a power of two")
    return n


@lru_cache(maxsize=512)
def _xy_pairs(n, a, b):
    z = np.arange(1 << n, dtype=np.int64)
    lo = z[(((z >> a) & 1) == 0) & (((z >> b) & 1) == 1)]
    hi = lo ^ ((1 << a) | (1 << b))
    return lo, hi


@lru_cache(maxsize=512)
def _xyy_pairs(n, big, s1, s2):
    z = np.arange(1 << n, dtype=np.int64)
    sel = (((z >> big) & 1) == 1) & (((z >> s1) & 1) == 0) & (((z >> s2) & 1) == 0)
    src = z[sel]
    dst = src ^ ((1 << big) | (1 << s1) | (1 << s2))
    return src, dst


def rotate_pairs(x, u, v, theta):
    """In place: ``(x_u, x_v) <- [[c, -is], [-is, c]] (x_u, x_v)`` with angle ``theta``."""
    c = np.cos(theta)
    s = -1j * np.sin(theta)
    xu = x[u]
    xv = x[v]
    x[u] = c * xu + s * xv
    x[v] = s * xu + c * xv
    return x


@numba.njit(cache=True)
def _evolve_kernel(x, costs, gammas, betas, lo, hi, scales, offsets):
    n_gates = scales.shape[0]
    for layer in range(gammas.shape[0]):
        g = gammas[layer]
        for k in range(x.shape[0]):
            t = -g * costs[k]
            x[k] = x[k] * complex(np.cos(t), np.sin(t))
        b = betas[layer]
        for gi in range(n_gates):
            theta = scales[gi] * b
            c = np.cos(theta)
            s = complex(0.0, -np.sin(theta))
            for k in range(offsets[gi], offsets[gi + 1]):
                u = lo[k]
                v = hi[k]
                xu = x[u]
                xv = x[v]
                x[u] = c * xu + s * xv
                x[v] = s * xu + c * xv
    return x


def apply_xy(state, q_a, q_b, beta):
    n = n_qubits_of(state)
    _check_qubits(n, q_a, q_b)
    u, v = _xy_pairs(n, q_a, q_b)
    return rotate_pairs(state, u, v, 2.0 * beta)


def apply_xyy(state, q_big, q_s1, q_s2, beta, layout=None):
    """Three-qubit mixer; ``q_big`` carries twice the value of ``q_s1`` and ``q_s2``."""
    n = n_qubits_of(state)
    _check_qubits(n, q_big, q_s1, q_s2)
    if layout is not None:
        v = layout.value
        if not (v[q_big] == 2 * v[q_s1] == 2 * v[q_s2]):
            raise ValueError(
                f"XYY needs r(big) = 2 r(s1) = 2 r(s2), got {v[q_big]}, {v[q_s1]}, {v[q_s2]}"
            )
    u, w = _xyy_pairs(n, q_big, q_s1, q_s2)
    return rotate_pairs(state, u, w, 4.0 * beta)


def _ring_rounds(members):
    """Odd pairs, even pairs, then the closing pair, as in a three-round ring."""
    L = len(members)
    odd = [(members[i], members[i + 1]) for i in range(0, L - 1, 2)]
    even = [(members[i], members[i + 1]) for i in range(1, L - 1, 2)]
    wrap = [(members[-1], members[0])]
    return odd, even, wrap


def mixing_schedule(layout):
    """Ordered gate list of one mixing layer.

    First a ring of XY gates inside every power group (ascending power),
    then for each power from the top down a ring of XYY gates whose small
    pairs come from the group below and whose big qubit cycles through the
    group above, reused when that group is smaller and left idle when it is
    larger. Groups with fewer than two members get no ring.
    """
    groups = layout.groups
    J = layout.max_exponent
    gates = []
    for e in range(J + 1):
        A = groups.get(e, ())
        if len(A) < 2:
            continue
        for r, pairs in enumerate(_ring_rounds(A)):
            gates.extend(Gate("xy", p, ("xy", e, r)) for p in pairs)
    for e in range(J, 0, -1):
        small = groups.get(e - 1, ())
        big = groups.get(e, ())
        if len(small) < 2 or not big:
            continue
        k = 0
        for r, pairs in enumerate(_ring_rounds(small)):
            for s1, s2 in pairs:
                gates.append(Gate("xyy", (big[k], s1, s2), ("xyy", e, r)))
                k = (k + 1) % len(big)
    return gates


def schedule_depth(gates):
    """As-soon-as-possible circuit depth of a gate list."""
    ready = {}
    depth = 0
    for g in gates:
        level = 1 + max((ready.get(q, 0) for q in g.qubits), default=0)
        for q in g.qubits:
            ready[q] = level
        depth = max(depth, level)
    return depth


def apply_gate(state, gate, beta):
    if gate.kind == "xy":
        return apply_xy(state, *gate.qubits, beta)
    return apply_xyy(state, *gate.qubits, beta)


def apply_mixing_layer(state, layout, beta, gates=None):
    for g in gates if gates is not None else mixing_schedule(layout):
        apply_gate(state, g, beta)
    return state


def apply_phase(state, diag, gamma):
    state *= diag.phases(gamma)
    return state


def initial_state(layout, y0, D_hat=None):
    """Basis state of the canonical encoding of ``y0``."""
    y0 = np.asarray(y0, dtype=np.int64)
    if D_hat is not None and int(y0.sum()) != int(D_hat):
        raise InfeasibleProblem(f"initial point sums to {int(y0.sum())}, expected {D_hat}")
    n = layout.n_qubits
    if n > STATE_CAP:
        raise CapExceeded(f"{n} qubits exceeds state cap {STATE_CAP}")
    try:
        bits = encode_canonical(layout, y0)
    except ValueError as exc:
        raise InfeasibleProblem(str(exc)) from exc
    z = int((bits << np.arange(n, dtype=np.int64)).sum())
    state = np.zeros(1 << n, dtype=np.complex128)
    state[z] = 1.0
    return state


def precompute_diagonal(model, layout, eta=1.0, cap=STATE_CAP, indices=None):
    """Absolute cost ``cost(decode(z) + L)`` for every basis index ``z``.

    ``indices`` restricts the table to a subset of basis states.
    """
    n = layout.n_qubits
    if n > cap:
        raise CapExceeded(f"{n} qubits exceeds cap {cap}")
    if indices is None:
        indices = np.arange(1 << n, dtype=np.int64)
    values = np.empty(len(indices))
    chunk = 1 << 16
    for start in range(0, len(indices), chunk):
        part = indices[start : start + chunk]
        values[start : start + chunk] = cost(model, decode_index(layout, part) + model.L)
    return DiagonalCost(values, float(eta))


def check_norm(amplitudes, tol=NORM_TOL):
    norm = float(np.vdot(amplitudes, amplitudes).real)
    if abs(norm - 1.0) > tol:
        raise NormDrift(f"state norm {norm!r} drifted beyond {tol}")
    return norm


class QaoaCircuit:
    """QAOA evolution restricted to the basis states with encoded sum ``D_hat``.

    Parameters
    ----------
    model : IntegerModel
    layout : QubitLayout
        Encoding of the shifted ranges ``U - L``.
    eta : float
        Scale applied to the cost Hamiltonian.
    dense : bool
        Track all ``2**n`` amplitudes instead of the feasible ones.
    """

    def __init__(self, model, layout, eta=1.0, dense=False, cap=STATE_CAP):
        if layout.n_qubits > cap:
            raise CapExceeded(f"{layout.n_qubits} qubits exceeds cap {cap}")
        self.model = model
        self.layout = layout
        self._eta = float(eta)
        self.D_hat = int(model.D - model.L.sum())
        self.dense = dense
        if dense:
            self.indices = np.arange(1 << layout.n_qubits, dtype=np.int64)
        else:
            self.indices = feasible_indices(layout, self.D_hat, cap=cap)
            if self.indices.size == 0:
                raise InfeasibleProblem("no feasible encodings")
        self.diagonal = precompute_diagonal(model, layout, eta, cap=cap, indices=self.indices)
        self.costs = self.diagonal.values
        self.gates = mixing_schedule(layout)
        self._pairs = [self._compile(g) for g in self.gates]
        self._lo = np.concatenate([p[0] for p in self._pairs] or [np.zeros(0, np.int64)])
        self._hi = np.concatenate([p[1] for p in self._pairs] or [np.zeros(0, np.int64)])
        self._scales = np.array([p[2] for p in self._pairs], dtype=float)
        self._offsets = np.concatenate([[0], np.cumsum([p[0].size for p in self._pairs])]).astype(np.int64)

    @property
    def eta(self):
        return self._eta

    @eta.setter
    def eta(self, value):
        self._eta = float(value)
        self.diagonal = DiagonalCost(self.costs, self._eta)

    def _compile(self, gate):
        n = self.layout.n_qubits
        if self.dense:
            lo, hi = _xy_pairs(n, *gate.qubits) if gate.kind == "xy" else _xyy_pairs(n, *gate.qubits)
        else:
            z = self.indices
            if gate.kind == "xy":
                a, b = gate.qubits
                lo = z[(((z >> a) & 1) == 0) & (((z >> b) & 1) == 1)]
                hi = lo ^ ((1 << a) | (1 << b))
            else:
                big, s1, s2 = gate.qubits
                sel = (((z >> big) & 1) == 1) & (((z >> s1) & 1) == 0) & (((z >> s2) & 1) == 0)
                lo = z[sel]
                hi = lo ^ ((1 << big) | (1 << s1) | (1 << s2))
            lo = np.searchsorted(z, lo)
            pos = np.searchsorted(z, hi)
            if pos.size and (pos.max() >= z.size or np.any(z[pos] != hi)):
                raise RuntimeError(f"gate {gate} leaves the feasible subspace")
            hi = pos
        scale = 2.0 if gate.kind == "xy" else 4.0
        return lo, hi, scale

    @property
    def size(self):
        return self.indices.size

    def decoded(self):
        """Shifted variable vectors ``y`` for each tracked basis state."""
        return decode_index(self.layout, self.indices)

    def initial(self, y0):
        y0 = np.asarray(y0, dtype=np.int64)
        if int(y0.sum()) != self.D_hat:
            raise InfeasibleProblem(f"initial point sums to {int(y0.sum())}, expected {self.D_hat}")
        bits = encode_canonical(self.layout, y0)
        z = int((bits << np.arange(self.layout.n_qubits, dtype=np.int64)).sum())
        pos = int(np.searchsorted(self.indices, z))
        x = np.zeros(self.size, dtype=np.complex128)
        x[pos] = 1.0
        return x

    def mix(self, x, beta):
        for lo, hi, scale in self._pairs:
            rotate_pairs(x, lo, hi, scale * beta)
        return x

    def phase(self, x, gamma):
        x *= self.diagonal.phases(gamma)
        return x

    def evolve(self, gammas, betas, y0=None, state=None, check=True):
        """Amplitudes on ``self.indices`` after ``len(gammas)`` layers."""
        if len(gammas) != len(betas):
            raise ValueError("gamma and beta must have equal length")
        x = self.initial(y0) if state is None else np.array(state, dtype=np.complex128)
        _evolve_kernel(
            x,
            self._eta * self.costs,
            np.asarray(gammas, dtype=float),
            np.asarray(betas, dtype=float),
            self._lo,
            self._hi,
            self._scales,
            self._offsets,
        )
        if check:
            check_norm(x)
        return x

    def probabilities(self, gammas, betas, y0):
        x = self.evolve(gammas, betas, y0)
        return (x.real**2 + x.imag**2)

    def to_dense(self, x):
        out = np.zeros(1 << self.layout.n_qubits, dtype=np.complex128)
        out[self.indices] = x
        return out


def support_sums(layout, state, atol=0.0):
    """Distinct encoded totals carried by basis states with ``|amp| > atol``."""
    nz = np.flatnonzero(np.abs(state) > atol)
    return np.unique(qubit_sums(layout, nz))
