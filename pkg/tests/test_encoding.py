import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbqaoa.encoding import (
    QubitLayout,
    build_layout,
    decode,
    decode_index,
    encode_canonical,
    enumerate_encodings,
    feasible_indices,
    qubit_counts,
)
from qbqaoa.exceptions import CapExceeded
from qbqaoa.problem import IntegerModel, enumerate_feasible, shift


def values_of(layout, i=0):
    return [int(layout.value[m]) for m in layout.asset_qubits(i)]


def test_fixtures():
    assert values_of(build_layout([17])) == [1, 2, 2, 4, 8]
    assert values_of(build_layout([4])) == [1, 1, 2]
    six = build_layout([4] * 6)
    assert six.n_qubits == 18
    assert all(values_of(six, i) == [1, 1, 2] for i in range(6))
    two = build_layout([20, 20])
    assert values_of(two, 0) == values_of(two, 1) == [1, 1, 2, 4, 4, 8]


def test_pinned_variable_has_no_qubits():
    layout = build_layout([0])
    assert layout.n_qubits == 0
    assert decode(layout, np.zeros(0, dtype=int)).tolist() == [0]


def test_pure_binary_ranges():
    for m in range(1, 12):
        assert build_layout([2**m - 1]).n_qubits == m


def test_r1000_count():
    per_asset, total = qubit_counts(build_layout([1000] * 6))
    assert per_asset.tolist() == [15] * 6 and total == 90


def multiplicity_oracle(r):
    """Qubits per power: one binary digit each below 2**n, plus the binary digits of the leftover."""
    n = int(math.floor(math.log2(r + 1)))
    rest = r - (2**n - 1)
    counts = Counter({2**j: 1 for j in range(n)})
    for j in range(n):
        if rest >> j & 1:
            counts[2**j] += 1
    return counts


@pytest.mark.parametrize("r", range(1, 300))
def test_single_variable_multiplicities(r):
    assert Counter(values_of(build_layout([r]))) == multiplicity_oracle(r)


def test_envelope_sweep():
    for r in range(1, 4097):
        layout = build_layout([r])
        n = layout.n_qubits
        assert math.log2(r + 1) - 1 <= n <= 2 * math.log2(r + 1)
        assert decode(layout, np.ones(n, dtype=int)).tolist() == [r]


@pytest.mark.parametrize("r", range(0, 65))
def test_exhaustive_decode_and_round_trip(r):
    layout = build_layout([r])
    n = layout.n_qubits
    if n <= 12:
        ys = decode_index(layout, np.arange(1 << n))[:, 0]
        assert ys.min() == 0 and ys.max() == r
    for y in range(r + 1):
        assert decode(layout, encode_canonical(layout, [y])).tolist() == [y]


def test_canonical_extremes():
    layout = build_layout([17])
    assert encode_canonical(layout, [0]).tolist() == [0] * 5
    assert encode_canonical(layout, [17]).tolist() == [1] * 5


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 40), min_size=1, max_size=5))
def test_split_rule_invariant(R):
    layout = build_layout(R)
    assert [int(layout.value[layout.asset == i].sum()) for i in range(len(R))] == R
    if np.count_nonzero(R) >= 2:
        J = layout.max_exponent
        for e in range(J):
            assert len(layout.group(e)) >= 2
    for i in range(len(R)):
        assert decode(layout, (layout.asset == i).astype(int))[i] == R[i]


def test_split_cascade():
    layout = build_layout([1, 20])
    assert values_of(layout, 0) == [1]
    assert sorted(values_of(layout, 1)) == [1, 1, 2, 2, 2, 4, 4, 4]


def brute_count(layout, D):
    n = layout.n_qubits
    sums = decode_index(layout, np.arange(1 << n)).sum(axis=1)
    return int((sums == D).sum())


def test_feasible_encodings_two_assets():
    layout = build_layout([20, 20])
    idx = feasible_indices(layout, 20)
    assert idx.size == 220 == brute_count(layout, 20)
    portfolios = {tuple(y) for y in decode_index(layout, idx)}
    assert len(portfolios) == 21
    assert np.all(np.diff(idx) > 0)


def test_all_ones_is_unique_at_full_sum():
    layout = build_layout([3, 5])
    bits = list(enumerate_encodings(layout, 8))
    assert len(bits) == 1 and bits[0].tolist() == [1] * layout.n_qubits


def test_encoding_multiset_matches_enumeration():
    layout = build_layout([4] * 6)
    idx = feasible_indices(layout, 14)
    got = Counter(tuple(y) for y in decode_index(layout, idx))
    per_value = Counter(decode_index(build_layout([4]), np.arange(8))[:, 0].tolist())
    model = IntegerModel(np.zeros((6, 6)), np.zeros(6), [0] * 6, [4] * 6, 14)
    expected = {tuple(y): math.prod(per_value[v] for v in y) for y in enumerate_feasible(shift(model))}
    assert got == expected


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=3), st.integers(0, 18))
def test_feasible_indices_vs_brute_force(R, D):
    layout = build_layout(R)
    idx = feasible_indices(layout, D)
    assert idx.size == brute_count(layout, D)


def test_cap():
    with pytest.raises(CapExceeded):
        feasible_indices(build_layout([2**20]), 5, cap=10)


def test_from_values_and_json():
    layout = QubitLayout.from_values([1, 1, 1, 2, 2, 4])
    assert layout.R == (11,)
    assert layout.groups == {0: (0, 1, 2), 1: (3, 4), 2: (5,)}
    assert '"n_qubits": 6' in layout.to_json()
    with pytest.raises(ValueError):
        QubitLayout.from_values([3])


def test_index_bit_order():
    layout = QubitLayout.from_values([1, 2, 4])
    for z, bits in enumerate(itertools.product([0, 1], repeat=3)):
        assert decode_index(layout, z).tolist() == [z]
