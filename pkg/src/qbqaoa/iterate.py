"""Precision increasing iteration.

A coarse solve on ``[l0, u0]`` is followed by solves on windows that
shrink by ``lam`` per iteration around the previous solution while the
grid spacing shrinks by the same factor, so each asset keeps roughly the
same number of grid points and the same qubit count.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from ._validation import check_positive_int
from .exceptions import ConfigError, InfeasibleProblem
from .problem import discretize, precision_steps, shift
from .qaoa import QuasiBinaryQAOA

_TOL = 1e-9


@dataclass(frozen=True)
class IterationConfig:
    """Outer loop settings plus the inner QAOA settings."""

    alpha0: float = 0.5
    lam: float = 0.5
    iterations: int = 4
    p: int = 8
    scheduler: str = "iqaoa"
    estimator: str = "cvar"
    tau: float = 0.05
    shots: int = 100_000
    sampling: bool = False
    eta: object = "auto"
    budget: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ConfigError(f"lam must be in (0, 1), got {self.lam!r}")
        try:
            check_positive_int(self.iterations, "iterations")
            precision_steps(self.alpha0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def step_fraction(self, i):
        """``alpha_i`` as an exact fraction."""
        lam = Fraction(self.lam).limit_denominator(10**6)
        return Fraction(1, precision_steps(self.alpha0)) * lam**i

    def alpha(self, i):
        a = self.step_fraction(i)
        if a.numerator != 1:
            raise ConfigError(f"alpha at iteration {i} is {a}, whose inverse is not an integer")
        return 1.0 / a.denominator

    def qaoa(self, seed=None):
        return QuasiBinaryQAOA(
            p=self.p,
            scheduler=self.scheduler,
            estimator=self.estimator,
            tau=self.tau,
            shots=self.shots,
            sampling=self.sampling,
            eta=self.eta,
            budget=self.budget,
            seed=self.seed if seed is None else seed,
        )


class SolverOutput(NamedTuple):
    w: np.ndarray
    cost: float = math.nan
    report: object = None


@dataclass
class IterationRecord:
    iteration: int
    alpha: float
    lower: np.ndarray
    upper: np.ndarray
    w: np.ndarray
    cost: float
    representable: bool
    n_qubits: int = None
    report: object = field(default=None, repr=False)

    def to_dict(self):
        out = {
            "iteration": self.iteration,
            "alpha": self.alpha,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "w": self.w.tolist(),
            "cost": self.cost,
            "representable": self.representable,
            "n_qubits": self.n_qubits,
        }
        if self.report is not None:
            costs = self.report.solution_costs[self.report.solution_probs * self.report.estimator.shots >= 1]
            out["worst_reported_cost"] = float(costs.max()) if costs.size else None
            out["ar_cvar"] = self.report.ar_cvar
            out["ar_normal"] = self.report.ar_normal
        return out


@dataclass
class IterationResult:
    w: np.ndarray
    records: list
    halted: str = None

    def to_dict(self, config=None):
        out = {
            "w": self.w.tolist(),
            "halted": self.halted,
            "iterations": [r.to_dict() for r in self.records],
        }
        if config is not None:
            out["config"] = asdict(config)
        return out

    def to_json(self, config=None):
        return json.dumps(self.to_dict(config), indent=2, sort_keys=True)


def on_grid(w, alpha):
    k = np.asarray(w, dtype=float) / alpha
    return bool(np.all(np.abs(k - np.round(k)) <= _TOL * np.maximum(1.0, np.abs(k))))


def window(w, l0, u0, lam_i, alpha_i):
    """Bounds of width ``(u0 - l0) * lam_i`` centred on ``w``, clamped and grid aligned.

    The lower bound is rounded down and the upper bound up to multiples of
    ``alpha_i``, then clamped again to ``[l0, u0]``.
    """
    w = np.asarray(w, dtype=float)
    half = (u0 - l0) * lam_i / 2
    lo = np.maximum(l0, w - half)
    hi = np.minimum(u0, w + half)
    lo = np.floor(lo / alpha_i + _TOL) * alpha_i
    hi = np.ceil(hi / alpha_i - _TOL) * alpha_i
    return np.maximum(l0, lo), np.minimum(u0, hi)


def representable(w, lower, upper, alpha):
    """Whether ``w`` is an ``alpha`` grid point inside ``[lower, upper]``."""
    w = np.asarray(w, dtype=float)
    inside = np.all(w >= lower - _TOL) and np.all(w <= upper + _TOL)
    return bool(inside and on_grid(w, alpha))


def _as_output(out):
    if isinstance(out, SolverOutput):
        return out
    if isinstance(out, tuple):
        return SolverOutput(np.asarray(out[0], dtype=float), *out[1:])
    return SolverOutput(np.asarray(out, dtype=float))


def refine(solver, config, l0, u0, total=1.0):
    """Run the iteration.

    ``solver(alpha, lower, upper, previous)`` returns the continuous
    weights, or a :class:`SolverOutput`; ``previous`` is the last solution
    (``None`` on the first call). Bounds are per-asset arrays. A window
    whose sum range excludes ``total`` halts the loop with partial results.
    """
    first = _as_output(solver(config.alpha(0), np.asarray(l0, dtype=float), np.asarray(u0, dtype=float), None))
    n = first.w.shape[0]
    l0 = np.broadcast_to(np.asarray(l0, dtype=float), (n,)).copy()
    u0 = np.broadcast_to(np.asarray(u0, dtype=float), (n,)).copy()
    records = [_record(0, config.alpha(0), l0, u0, first, True)]
    w = first.w
    for i in range(1, config.iterations + 1):
        alpha_i = config.alpha(i)
        lo, hi = window(w, l0, u0, config.lam**i, alpha_i)
        if lo.sum() > total + _TOL or hi.sum() < total - _TOL:
            return IterationResult(w, records, halted=f"iteration {i}: window sums [{lo.sum()}, {hi.sum()}] exclude {total}")
        rep = representable(w, lo, hi, alpha_i)
        out = _as_output(solver(alpha_i, lo, hi, w))
        records.append(_record(i, alpha_i, lo, hi, out, rep))
        w = out.w
    return IterationResult(w, records)


def _record(i, alpha, lo, hi, out, rep):
    n_qubits = getattr(out.report, "n_qubits", None)
    return IterationRecord(i, alpha, lo, hi, out.w, float(out.cost), rep, n_qubits, out.report)


def qaoa_solver(moments, q, config, total=1.0, warm_start=False):
    """Solver for :func:`refine` backed by :class:`QuasiBinaryQAOA`.

    Returns the best reported solution as weights and its cost, which is
    the continuous objective at those weights. With ``warm_start`` the
    initial state encodes the previous solution instead of the greedy fill.
    """

    def solve(alpha, lower, upper, previous):
        try:
            model = discretize(moments, q, alpha, lower, upper, total)
        except ValueError as exc:
            raise InfeasibleProblem(str(exc)) from None
        y0 = None
        if warm_start and previous is not None:
            y0 = np.round(np.asarray(previous) / alpha).astype(np.int64) - model.L
        est = config.qaoa().fit(model, y0=y0)
        rep = est.report_
        return SolverOutput(rep.best_x * alpha, rep.best_cost, rep)

    return solve


def shifted_ranges(moments, q, alpha, lower, upper, total=1.0):
    """Per-asset ranges ``R`` of the discretized window (qubit-count check)."""
    return shift(discretize(moments, q, alpha, lower, upper, total)).R
