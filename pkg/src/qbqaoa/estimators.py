"""Objective estimators over a measured cost distribution.

Exact estimators work on the probability vector of the final state;
sampled estimators work on multinomial shot counts drawn from it.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import check_random_state

KINDS = ("normal", "cvar")


def _check_tau(tau):
    if not 0 < tau <= 1:
        raise ValueError(f"tail rate must be in (0, 1], got {tau!r}")


def estimate_normal(probabilities, costs):
    """Mean cost under the exact distribution."""
    p = np.asarray(probabilities, dtype=float)
    if p.size == 0:
        raise ValueError("empty distribution")
    return float(p @ np.asarray(costs, dtype=float))


def estimate_cvar(probabilities, costs, tau, order=None):
    """Mean cost of the lowest-cost ``tau`` probability mass.

    The state straddling the ``tau`` boundary contributes only the part of
    its probability that fits, so the value is continuous in ``tau``.
    ``order`` may pass a precomputed ascending-cost permutation.
    """
    _check_tau(tau)
    p = np.asarray(probabilities, dtype=float)
    c = np.asarray(costs, dtype=float)
    if p.size == 0:
        raise ValueError("empty distribution")
    if order is None:
        order = np.argsort(c, kind="stable")
    p = p[order]
    c = c[order]
    total = p.sum()
    mass = tau * total
    cum = np.cumsum(p)
    k = int(np.searchsorted(cum, mass, side="left"))
    k = min(k, p.size - 1)
    before = cum[k - 1] if k > 0 else 0.0
    value = float(p[:k] @ c[:k]) + (mass - before) * c[k]
    return value / mass


def sample_counts(probabilities, shots, random_state=None):
    """Multinomial shot counts for ``shots`` measurements."""
    rng = check_random_state(random_state)
    p = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    return rng.multinomial(int(shots), p / p.sum())


def sampled_normal(counts, costs):
    counts = np.asarray(counts)
    K = counts.sum()
    if K == 0:
        raise ValueError("no samples")
    return float(counts @ np.asarray(costs, dtype=float) / K)


def sampled_cvar(counts, costs, tau, order=None):
    """Mean of the ``ceil(tau * K)`` lowest-cost samples."""
    _check_tau(tau)
    counts = np.asarray(counts, dtype=np.int64)
    c = np.asarray(costs, dtype=float)
    K = int(counts.sum())
    if K == 0:
        raise ValueError("no samples")
    n_tail = math.ceil(tau * K)
    if order is None:
        order = np.argsort(c, kind="stable")
    taken = np.minimum(counts[order], np.maximum(n_tail - np.concatenate([[0], np.cumsum(counts[order])[:-1]]), 0))
    return float(taken @ c[order] / n_tail)


def approximation_ratio(achieved, optimal, worst):
    """``(worst - achieved) / (worst - optimal)``; 1.0 with a warning when all costs tie."""
    span = worst - optimal
    if span <= 0:
        warnings.warn("degenerate instance: optimal and worst costs coincide; ar set to 1", stacklevel=2)
        return 1.0
    return float((worst - achieved) / span)


@dataclass(frozen=True)
class EstimatorConfig:
    """Which statistic to optimize and how it is measured.

    ``kind`` is ``"normal"`` (mean cost) or ``"cvar"`` (mean of the best
    ``tau`` fraction). ``"exact"`` is accepted as an alias for an exact
    normal estimator. With ``sampling`` the statistic is computed from
    ``shots`` multinomial draws.
    """

    kind: str = "cvar"
    tau: float = 0.05
    shots: int = 100_000
    sampling: bool = False
    seed: int = 0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind == "exact":
            kind = "normal"
            object.__setattr__(self, "sampling", False)
        if kind not in KINDS:
            raise ValueError(f"estimator kind must be one of normal, cvar, exact; got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        _check_tau(self.tau)
        if self.shots < 1:
            raise ValueError("shots must be >= 1")

    def evaluate(self, probabilities, costs, order=None, rng=None):
        if self.sampling:
            counts = sample_counts(probabilities, self.shots, rng)
            if self.kind == "normal":
                return sampled_normal(counts, costs)
            return sampled_cvar(counts, costs, self.tau, order)
        if self.kind == "normal":
            return estimate_normal(probabilities, costs)
        return estimate_cvar(probabilities, costs, self.tau, order)
