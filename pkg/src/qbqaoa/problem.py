"""Integer portfolio models, their shifted form, and exhaustive oracles.

The integer model is::

    min  sum_ij sigma_ij x_i x_j + sum_i mu_i x_i
    s.t. sum_i x_i = D,  L_i <= x_i <= U_i,  x integer

Shifting by ``y = x - L`` gives a model over ``0 <= y_i <= R_i`` with sum
``D_hat``; the additive constant is kept so reported costs stay absolute.
"""

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import check_int_vector, check_square, check_vector
from .exceptions import CapExceeded, InfeasibleProblem

ENUMERATION_CAP = 10**8
_GRID_TOL = 1e-9


@dataclass(frozen=True)
class IntegerModel:
    sigma: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    L: np.ndarray
    U: np.ndarray
    D: int

    def __post_init__(self):
        mu = check_vector(self.mu, "mu")
        n = mu.shape[0]
        sigma = check_square(self.sigma, "sigma", size=n)
        L = check_int_vector(self.L, "L", size=n)
        U = check_int_vector(self.U, "U", size=n)
        D = int(self.D)
        if D != self.D:
            raise ValueError("D must be an integer")
        if np.any(L > U):
            raise InfeasibleProblem("lower bound exceeds upper bound")
        if not L.sum() <= D <= U.sum():
            raise InfeasibleProblem(f"sum target {D} outside [{L.sum()}, {U.sum()}]")
        for name, arr in (("sigma", sigma), ("mu", mu), ("L", L), ("U", U)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "D", D)

    @property
    def n(self):
        return self.mu.shape[0]

    def to_dict(self):
        return {
            "sigma": self.sigma.tolist(),
            "mu": self.mu.tolist(),
            "L": self.L.tolist(),
            "U": self.U.tolist(),
            "D": self.D,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["sigma"], data["mu"], data["L"], data["U"], data["D"])

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ShiftedModel:
    sigma: np.ndarray = field(repr=False)
    mu_hat: np.ndarray = field(repr=False)
    R: np.ndarray
    D_hat: int
    offset: np.ndarray
    constant: float

    @property
    def n(self):
        return self.R.shape[0]

    def cost(self, y):
        """Shifted objective ``y' sigma y + mu_hat' y`` (no constant)."""
        return _quadratic(self.sigma, self.mu_hat, y)

    def absolute_cost(self, y):
        """Cost of ``x = y + L`` in the original model's units."""
        return self.cost(y) + self.constant


@dataclass(frozen=True)
class ContinuousModel:
    """Weights model over a precision grid: objective ``w's w - e'w``."""

    s: np.ndarray = field(repr=False)
    e: np.ndarray = field(repr=False)
    l: np.ndarray
    u: np.ndarray
    alpha: float

    def objective(self, w):
        w = np.asarray(w, dtype=float)
        return np.einsum("...i,ij,...j->...", w, self.s, w) - w @ self.e


class BruteForceStats(NamedTuple):
    best: float
    worst: float
    uniform_mean: float
    n_solutions: int
    argmin: np.ndarray


def _quadratic(sigma, mu, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != mu.shape[0]:
        raise ValueError(f"expected vectors of length {mu.shape[0]}, got {x.shape[-1]}")
    return np.einsum("...i,ij,...j->...", x, sigma, x) + x @ mu


def cost(model, x):
    """Objective of ``model`` at integer point(s) ``x``; bounds are not checked."""
    return _quadratic(model.sigma, model.mu, x)


def precision_steps(alpha):
    """Return ``1/alpha`` as an int, raising if it is not (close to) integral."""
    inv = 1.0 / float(alpha)
    steps = round(inv)
    if steps < 1 or abs(inv - steps) > _GRID_TOL * max(1.0, inv):
        raise ValueError(f"1/alpha must be a positive integer, got 1/{alpha!r} = {inv!r}")
    return steps


def to_grid(values, alpha, name):
    """Integers ``values / alpha``; raises if any value is off the alpha grid."""
    scaled = np.asarray(values, dtype=float) / alpha
    rounded = np.round(scaled)
    if np.any(np.abs(scaled - rounded) > _GRID_TOL * np.maximum(1.0, np.abs(scaled))):
        raise ValueError(f"{name} is not a multiple of alpha={alpha!r}")
    return rounded.astype(np.int64)


def continuous_model(moments, q, alpha, l, u):
    n = moments.n_assets
    return ContinuousModel(
        s=0.5 * q * moments.covariance,
        e=np.asarray(moments.expectation, dtype=float),
        l=np.broadcast_to(np.asarray(l, dtype=float), (n,)).copy(),
        u=np.broadcast_to(np.asarray(u, dtype=float), (n,)).copy(),
        alpha=float(alpha),
    )


def discretize(moments, q, alpha, l, u, total=1.0):
    """Integer model whose cost at ``x`` equals ``(q/2) w'Sw - w'E`` at ``w = alpha*x``.

    ``l`` and ``u`` are weight bounds (scalars broadcast over assets) and must
    lie on the alpha grid. ``total`` is the weight sum, 1 for a fully
    invested portfolio and 0 for a market-neutral one.
    """
    n = moments.n_assets
    steps = precision_steps(alpha)
    alpha = 1.0 / steps
    l = np.broadcast_to(np.asarray(l, dtype=float), (n,))
    u = np.broadcast_to(np.asarray(u, dtype=float), (n,))
    L = to_grid(l, alpha, "lower bound")
    U = to_grid(u, alpha, "upper bound")
    D = to_grid([total], alpha, "sum target")[0]
    sigma = 0.5 * q * moments.covariance * alpha**2
    mu = -np.asarray(moments.expectation) * alpha
    return IntegerModel(sigma, mu, L, U, int(D))


def shift(model):
    L = model.L
    sigma = model.sigma
    mu_hat = model.mu + 2.0 * sigma @ L
    constant = float(L @ sigma @ L + model.mu @ L)
    return ShiftedModel(
        sigma=sigma,
        mu_hat=mu_hat,
        R=(model.U - L).astype(np.int64),
        D_hat=int(model.D - L.sum()),
        offset=L.copy(),
        constant=constant,
    )


def greedy_allocation(R, D_hat):
    """Fill variables to their range in order until the sum is reached."""
    R = check_int_vector(R, "R")
    if np.any(R < 0):
        raise ValueError("ranges must be non-negative")
    if D_hat < 0 or D_hat > R.sum():
        raise InfeasibleProblem(f"sum {D_hat} not reachable with ranges summing to {R.sum()}")
    y = np.zeros_like(R)
    remaining = int(D_hat)
    for i, r in enumerate(R):
        take = min(int(r), remaining)
        y[i] = take
        remaining -= take
        if remaining == 0:
            break
    return y


def count_feasible(R, D_hat):
    """Number of integer vectors ``0 <= y <= R`` with ``sum(y) = D_hat`` (DP)."""
    ways = np.zeros(int(D_hat) + 1, dtype=object)
    ways[0] = 1
    for r in R:
        nxt = np.zeros_like(ways)
        for s in range(len(ways)):
            if ways[s]:
                hi = min(len(ways) - 1, s + int(r))
                nxt[s : hi + 1] += ways[s]
        ways = nxt
    return int(ways[int(D_hat)])


def enumerate_feasible(shifted, cap=ENUMERATION_CAP):
    """Yield every feasible ``y`` of a shifted model in lexicographic order."""
    R = [int(r) for r in shifted.R]
    target = int(shifted.D_hat)
    size = 1
    for r in R:
        size *= r + 1
    if size > cap:
        raise CapExceeded(f"search space {size} exceeds cap {cap}")
    n = len(R)
    suffix = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + R[i]
    if not 0 <= target <= suffix[0]:
        return
    y = [0] * n

    def dfs(i, left):
        if i == n - 1:
            y[i] = left
            yield np.array(y, dtype=np.int64)
            return
        lo = max(0, left - suffix[i + 1])
        for v in range(lo, min(R[i], left) + 1):
            y[i] = v
            yield from dfs(i + 1, left - v)

    if n == 0:
        if target == 0:
            yield np.zeros(0, dtype=np.int64)
        return
    yield from dfs(0, target)


def feasible_array(shifted, cap=ENUMERATION_CAP):
    rows = list(enumerate_feasible(shifted, cap=cap))
    return np.array(rows, dtype=np.int64).reshape(len(rows), shifted.n)


def brute_force_stats(shifted, model=None, cap=ENUMERATION_CAP):
    """Optimal, worst and uniform-mean cost over all feasible solutions.

    Costs are absolute (original model units). With ``model`` given the
    absolute cost is evaluated directly on ``x = y + L``; otherwise the
    stored shift constant is added.
    """
    ys = feasible_array(shifted, cap=cap)
    if ys.shape[0] == 0:
        raise InfeasibleProblem("no feasible solutions")
    if model is not None:
        costs = cost(model, ys + shifted.offset)
    else:
        costs = shifted.absolute_cost(ys)
    k = int(np.argmin(costs))
    return BruteForceStats(
        best=float(costs[k]),
        worst=float(costs.max()),
        uniform_mean=float(costs.mean()),
        n_solutions=int(ys.shape[0]),
        argmin=ys[k] + shifted.offset,
    )
