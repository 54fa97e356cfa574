"""Quasi-binary encoding of bounded integer variables.

A variable ``0 <= y <= R`` gets ``n = floor(log2(R + 1))`` binary qubits
with values ``1, 2, ..., 2**(n-1)``. The leftover ``R - 2**n + 1`` is
written in binary and each set bit adds one duplicate qubit of that
power. Every bitstring therefore decodes into ``[0, R]``, and all ones
decode to exactly ``R``.

Qubit ``m`` is bit ``m`` of a basis-state index (qubit 0 is least
significant). Qubits are ordered by asset, then by ascending value, with
duplicates adjacent.
"""

import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_int_vector
from .exceptions import CapExceeded

ENCODING_CAP = 26


@dataclass(frozen=True)
class QubitLayout:
    R: tuple
    value: np.ndarray
    asset: np.ndarray

    def __post_init__(self):
        for name in ("value", "asset"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "R", tuple(int(r) for r in self.R))

    @property
    def n_qubits(self):
        return int(self.value.shape[0])

    @property
    def n_assets(self):
        return len(self.R)

    @property
    def exponents(self):
        return np.array([int(v).bit_length() - 1 for v in self.value], dtype=np.int64)

    @property
    def max_exponent(self):
        """Exponent of the largest qubit value, or -1 for an empty layout."""
        return int(self.exponents.max()) if self.n_qubits else -1

    @property
    def groups(self):
        """``{e: (qubits of value 2**e in layout order)}`` for every exponent present."""
        exps = self.exponents
        return {
            e: tuple(int(m) for m in np.flatnonzero(exps == e))
            for e in range(self.max_exponent + 1)
        }

    def group(self, e):
        return tuple(int(m) for m in np.flatnonzero(self.exponents == e))

    @property
    def per_asset(self):
        """For each asset, a list of ``(exponent, multiplicity)`` pairs."""
        out = []
        exps = self.exponents
        for i in range(self.n_assets):
            mine = exps[self.asset == i]
            vals, counts = np.unique(mine, return_counts=True)
            out.append([(int(v), int(c)) for v, c in zip(vals, counts)])
        return out

    def asset_qubits(self, i):
        return tuple(int(m) for m in np.flatnonzero(self.asset == i))

    def weight_matrix(self):
        """``W[m, i] = r(m)`` if qubit ``m`` belongs to asset ``i``; ``y = bits @ W``."""
        W = np.zeros((self.n_qubits, self.n_assets), dtype=np.int64)
        W[np.arange(self.n_qubits), self.asset] = self.value
        return W

    @classmethod
    def from_values(cls, values, asset=None):
        """Layout from explicit qubit values (one asset unless ``asset`` is given)."""
        values = np.asarray(values, dtype=np.int64)
        if np.any(values <= 0) or np.any(values & (values - 1)):
            raise ValueError("qubit values must be powers of two")
        asset = np.zeros_like(values) if asset is None else np.asarray(asset, dtype=np.int64)
        n_assets = int(asset.max()) + 1 if asset.size else 0
        R = tuple(int(values[asset == i].sum()) for i in range(n_assets))
        return cls(R, values, asset)

    def to_dict(self):
        return {
            "R": list(self.R),
            "n_qubits": self.n_qubits,
            "qubits": [
                {"index": m, "value": int(v), "asset": int(a)}
                for m, (v, a) in enumerate(zip(self.value, self.asset))
            ],
            "groups": {str(2**e): list(q) for e, q in self.groups.items()},
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _base_counts(r):
    """Per-exponent qubit multiplicities for one variable before splitting."""
    if r == 0:
        return []
    n = (r + 1).bit_length() - 1
    extra = r - 2**n + 1
    return [1 + ((extra >> e) & 1) for e in range(n)]


def build_layout(R):
    """Encode each range ``R[i]`` and apply the split rule across assets.

    Every exponent strictly below the global maximum must have at least
    two qubits so that the three-qubit mixer has operands. While the
    highest such exponent ``e`` is short, one ``2**(e+1)``-qubit of the
    asset with the largest range owning one (lowest index on ties) is
    replaced by two ``2**e``-qubits. Splits keep each asset's total value.
    With fewer than two non-fixed variables there is no value to move
    between assets and no split is made.
    """
    R = check_int_vector(R, "R")
    if np.any(R < 0):
        raise ValueError("ranges must be non-negative")
    counts = [_base_counts(int(r)) for r in R]
    width = max((len(c) for c in counts), default=0)
    counts = [c + [0] * (width - len(c)) for c in counts]

    def top():
        totals = [sum(c[e] for c in counts) for e in range(width)]
        live = [e for e, t in enumerate(totals) if t > 0]
        return (live[-1] if live else -1), totals

    while np.count_nonzero(R) >= 2:
        J, totals = top()
        short = [e for e in range(J) if totals[e] < 2]
        if not short:
            break
        e = short[-1]
        owners = [i for i in range(len(R)) if counts[i][e + 1] > 0]
        i = max(owners, key=lambda k: (int(R[k]), -k))
        counts[i][e + 1] -= 1
        counts[i][e] += 2

    value, asset = [], []
    for i, c in enumerate(counts):
        for e, k in enumerate(c):
            value.extend([2**e] * k)
            asset.extend([i] * k)
    return QubitLayout(tuple(int(r) for r in R), np.array(value, dtype=np.int64), np.array(asset, dtype=np.int64))


def index_bits(index, n_qubits):
    """Bits of basis index(es), shape ``(..., n_qubits)``; bit 0 is qubit 0."""
    idx = np.asarray(index, dtype=np.int64)
    return ((idx[..., None] >> np.arange(n_qubits, dtype=np.int64)) & 1).astype(np.int64)


def bits_index(bits):
    bits = np.asarray(bits, dtype=np.int64)
    return (bits << np.arange(bits.shape[-1], dtype=np.int64)).sum(axis=-1)


def decode(layout, bits):
    """Decode a bitstring (or a stack of them) into the shifted variable vector."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] != layout.n_qubits:
        raise ValueError(f"expected {layout.n_qubits} bits, got {bits.shape[-1]}")
    return bits @ layout.weight_matrix()


def decode_index(layout, index):
    """Decode basis-state index(es) directly."""
    return decode(layout, index_bits(index, layout.n_qubits))


def encode_canonical(layout, y):
    """A bitstring that decodes to ``y``.

    Per asset, qubits are taken greedily from the largest value down, the
    first qubit of a power before its duplicates. Below ``2**n`` this is
    the plain binary expansion on the first qubits; at the top of the range
    the duplicates fill in.
    """
    y = check_int_vector(y, "y", size=layout.n_assets)
    R = np.array(layout.R, dtype=np.int64)
    if np.any(y < 0) or np.any(y > R):
        raise ValueError(f"y={y.tolist()} outside [0, R={list(layout.R)}]")
    bits = np.zeros(layout.n_qubits, dtype=np.int64)
    for i in range(layout.n_assets):
        qubits = layout.asset_qubits(i)
        remaining = int(y[i])
        for m in sorted(qubits, key=lambda q: (-int(layout.value[q]), q)):
            v = int(layout.value[m])
            if v <= remaining:
                bits[m] = 1
                remaining -= v
        if remaining:
            raise RuntimeError(f"layout cannot represent y[{i}]={y[i]}")
    return bits


def qubit_sums(layout, index):
    """Total encoded value ``sum_m r(m) * bit_m`` for basis index(es)."""
    return index_bits(index, layout.n_qubits) @ layout.value


def feasible_indices(layout, D_hat, cap=ENCODING_CAP):
    """Ascending basis indices whose decoded variables sum to ``D_hat``."""
    n = layout.n_qubits
    if n > cap:
        raise CapExceeded(f"{n} qubits exceeds encoding cap {cap}")
    D_hat = int(D_hat)
    if n == 0:
        return np.array([0] if D_hat == 0 else [], dtype=np.int64)
    n_lo = n // 2
    n_hi = n - n_lo
    lo = np.arange(2**n_lo, dtype=np.int64)
    hi = np.arange(2**n_hi, dtype=np.int64)
    w_lo = index_bits(lo, n_lo) @ layout.value[:n_lo] if n_lo else np.zeros(1, dtype=np.int64)
    w_hi = index_bits(hi, n_hi) @ layout.value[n_lo:]
    buckets = {}
    order = np.argsort(w_lo, kind="stable")
    sorted_w = w_lo[order]
    for w in np.unique(sorted_w):
        a, b = np.searchsorted(sorted_w, [w, w + 1])
        buckets[int(w)] = np.sort(lo[order[a:b]])
    parts = []
    for h, wh in zip(hi, w_hi):
        match = buckets.get(D_hat - int(wh))
        if match is not None:
            parts.append((h << n_lo) | match)
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts)


def enumerate_encodings(layout, D_hat, cap=ENCODING_CAP):
    """Yield feasible bitstrings (as bit arrays) in ascending basis-index order."""
    for z in feasible_indices(layout, D_hat, cap=cap):
        yield index_bits(z, layout.n_qubits)


def qubit_counts(layout):
    """Per-asset qubit counts and the total."""
    per_asset = np.bincount(layout.asset, minlength=layout.n_assets).astype(np.int64)
    return per_asset, int(per_asset.sum())
