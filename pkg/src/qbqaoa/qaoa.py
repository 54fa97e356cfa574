"""QAOA driver: objective evaluation, optimization and parameter schedules."""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_random_state
from .circuit import QaoaCircuit
from .encoding import build_layout
from .estimators import (
    EstimatorConfig,
    approximation_ratio,
    estimate_cvar,
    estimate_normal,
    sample_counts,
    sampled_cvar,
    sampled_normal,
)
from .exceptions import ConfigError
from .problem import brute_force_stats, cost, greedy_allocation, shift

SCHEDULERS = ("sample20", "ols", "iols", "iqaoa")
GAMMA_BOX = 10 * math.pi
BETA_BOX = math.pi


@dataclass(frozen=True)
class QaoaParams:
    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float).reshape(-1)
        b = np.array(self.beta, dtype=float).reshape(-1)
        if g.shape != b.shape or g.size < 1:
            raise ValueError("gamma and beta must be non-empty and of equal length")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "beta", b)

    @property
    def p(self):
        return self.gamma.size

    def to_vector(self):
        return np.concatenate([self.gamma, self.beta])

    @classmethod
    def from_vector(cls, vec):
        vec = np.asarray(vec, dtype=float)
        p = vec.size // 2
        return cls(vec[:p], vec[p:])

    def to_dict(self):
        return {"gamma": self.gamma.tolist(), "beta": self.beta.tolist()}


def schedule_coordinates(p):
    """``d_i = (2i - 1) / (2p)`` for ``i = 1..p``."""
    p = check_positive_int(p, "p")
    return (2.0 * np.arange(1, p + 1) - 1.0) / (2.0 * p)


def linear_params(m1, m2, p):
    """Linear ramp: ``gamma_i = m1 d_i`` and ``beta_i = m2 (1 - d_i)``."""
    d = schedule_coordinates(p)
    return QaoaParams(m1 * d, m2 * (1.0 - d))


def interpolate_params(params, p):
    """Initial ``p``-layer angles on the line through the two nearest ``p-1`` coordinates.

    With a single previous layer the value is replicated.
    """
    d_old = schedule_coordinates(params.p)
    d_new = schedule_coordinates(p)
    if params.p == 1:
        return QaoaParams(np.full(p, params.gamma[0]), np.full(p, params.beta[0]))
    j = np.clip(np.searchsorted(d_old, d_new) - 1, 0, params.p - 2)
    t = (d_new - d_old[j]) / (d_old[j + 1] - d_old[j])

    def line(v):
        return v[j] + t * (v[j + 1] - v[j])

    return QaoaParams(line(params.gamma), line(params.beta))


def append_zero_layer(params):
    return QaoaParams(np.append(params.gamma, 0.0), np.append(params.beta, 0.0))


class QaoaObjective:
    """Maps QAOA angles to the configured estimator value.

    Holds the compiled circuit, the initial feasible point and the
    ascending-cost order used by the tail estimators.
    """

    def __init__(self, circuit, y0, estimator=None, random_state=None):
        self.circuit = circuit
        self.y0 = np.asarray(y0, dtype=np.int64)
        self.estimator = estimator or EstimatorConfig()
        self.rng = check_random_state(
            self.estimator.seed if random_state is None else random_state
        )
        self.order = np.argsort(circuit.costs, kind="stable")
        self.n_evaluations = 0

    def probabilities(self, params):
        x = self.circuit.evolve(params.gamma, params.beta, self.y0)
        return x.real**2 + x.imag**2

    def __call__(self, params):
        self.n_evaluations += 1
        probs = self.probabilities(params)
        return self.estimator.evaluate(probs, self.circuit.costs, self.order, self.rng)


@dataclass
class OptimizeResult:
    params: QaoaParams
    value: float
    evaluations: int
    trace: list = field(default_factory=list)
    initial: QaoaParams = None
    starts: list = None


def optimize(objective, init, budget=1000, rhobeg=0.5, tol=1e-6):
    """COBYLA from ``init`` for at most ``budget`` evaluations; returns the best point seen.

    ``trace`` records the best-so-far value after each evaluation.
    """
    budget = check_positive_int(budget, "budget")
    p = init.p
    best = {"value": math.inf, "x": init.to_vector()}
    trace = []

    def f(vec):
        if len(trace) >= budget:
            return best["value"]
        value = float(objective(QaoaParams.from_vector(vec)))
        if not math.isfinite(value):
            raise ValueError(f"objective returned non-finite value {value!r}")
        if value < best["value"]:
            best["value"] = value
            best["x"] = np.array(vec, dtype=float)
        trace.append(best["value"])
        return value

    if budget == 1:
        f(init.to_vector())
    else:
        scipy.optimize.minimize(
            f,
            init.to_vector(),
            method="COBYLA",
            options={"maxiter": budget, "rhobeg": rhobeg, "tol": tol},
        )
    vec = best["x"]
    return OptimizeResult(QaoaParams(vec[:p], vec[p:]), best["value"], len(trace), trace, init)


def _random_linear_start(rng):
    m1 = rng.uniform(0.0, 2.0 * math.pi)
    m2 = rng.uniform(0.0, math.pi / 2)
    return m1, m2


def schedule_sample20(objective, p, budget=1000, random_state=None, n_starts=20, rhobeg=0.5):
    """Best of ``n_starts`` COBYLA runs from uniform random angles."""
    rng = check_random_state(random_state)
    starts = [
        QaoaParams(rng.uniform(-GAMMA_BOX, GAMMA_BOX, p), rng.uniform(-BETA_BOX, BETA_BOX, p))
        for _ in range(n_starts)
    ]
    results = [optimize(objective, s, budget, rhobeg) for s in starts]
    k = int(np.argmin([r.value for r in results]))
    best = results[k]
    best.starts = starts
    best.evaluations = sum(r.evaluations for r in results)
    return best


def schedule_ols(objective, p, budget=1000, random_state=None, start=None, rhobeg=0.5):
    """Optimize the two ramp slopes, expand to ``2p`` angles, then refine them."""
    rng = check_random_state(random_state)
    m1, m2 = start if start is not None else _random_linear_start(rng)

    def slopes(params):
        return objective(linear_params(params.gamma[0], params.beta[0], p))

    coarse = optimize(slopes, QaoaParams([m1], [m2]), budget, rhobeg)
    expanded = linear_params(coarse.params.gamma[0], coarse.params.beta[0], p)
    fine = optimize(objective, expanded, budget, rhobeg)
    fine.trace = coarse.trace + [min(coarse.value, v) for v in fine.trace]
    fine.evaluations += coarse.evaluations
    fine.initial = expanded
    return fine


def schedule_iols(objective, p_max, budget=1000, random_state=None, rhobeg=0.5):
    """Grow depth one layer at a time, seeding each level by linear interpolation."""
    p_max = check_positive_int(p_max, "p_max")
    levels = [schedule_ols(objective, 1, budget, random_state, rhobeg=rhobeg)]
    for p in range(2, p_max + 1):
        init = interpolate_params(levels[-1].params, p)
        levels.append(optimize(objective, init, budget, rhobeg))
    return levels


def schedule_iqaoa(objective, p_max, budget=1000, random_state=None, rhobeg=0.5):
    """Grow depth one layer at a time, appending a zero layer to the previous optimum."""
    p_max = check_positive_int(p_max, "p_max")
    levels = [schedule_ols(objective, 1, budget, random_state, rhobeg=rhobeg)]
    for p in range(2, p_max + 1):
        init = append_zero_layer(levels[-1].params)
        levels.append(optimize(objective, init, budget, rhobeg))
    return levels


def run_schedule(objective, scheduler, p, budget=1000, random_state=None, n_starts=20, rhobeg=0.5):
    """Dispatch by scheduler name; returns the result at depth ``p``."""
    scheduler = scheduler.lower()
    if scheduler == "sample20":
        return schedule_sample20(objective, p, budget, random_state, n_starts, rhobeg)
    if scheduler == "ols":
        return schedule_ols(objective, p, budget, random_state, rhobeg=rhobeg)
    if scheduler == "iols":
        return schedule_iols(objective, p, budget, random_state, rhobeg)[-1]
    if scheduler == "iqaoa":
        return schedule_iqaoa(objective, p, budget, random_state, rhobeg)[-1]
    raise ConfigError(f"unknown scheduler {scheduler!r}; expected one of {SCHEDULERS}")


@dataclass
class RunReport:
    """Outcome of one QAOA run, in absolute (original model) cost units."""

    params: QaoaParams
    estimator: EstimatorConfig
    objective_value: float
    normal_value: float
    cvar_value: float
    optimal_cost: float
    worst_cost: float
    uniform_cost: float
    solutions: np.ndarray = field(repr=False)
    solution_costs: np.ndarray = field(repr=False)
    solution_probs: np.ndarray = field(repr=False)
    best_x: np.ndarray = None
    best_cost: float = math.nan
    mode_x: np.ndarray = None
    trace: list = field(default_factory=list, repr=False)
    n_qubits: int = 0
    n_encodings: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def ar_normal(self):
        return approximation_ratio(self.normal_value, self.optimal_cost, self.worst_cost)

    @property
    def ar_cvar(self):
        return approximation_ratio(self.cvar_value, self.optimal_cost, self.worst_cost)

    @property
    def ar(self):
        """Approximation ratio of the statistic that was optimized."""
        return self.ar_cvar if self.estimator.kind == "cvar" else self.ar_normal

    @property
    def ar_uniform(self):
        return approximation_ratio(self.uniform_cost, self.optimal_cost, self.worst_cost)

    def cdf_rows(self):
        """``(cost, probability, cumulative)`` per distinct cost, ascending."""
        costs = np.round(self.solution_costs, 15)
        uniq, inv = np.unique(costs, return_inverse=True)
        probs = np.bincount(inv, weights=self.solution_probs, minlength=uniq.size)
        return list(zip(uniq.tolist(), probs.tolist(), np.cumsum(probs).tolist()))

    def cdf_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cost", "probability", "cumulative"])
        for c, p, cum in self.cdf_rows():
            w.writerow([repr(c), repr(p), repr(cum)])
        return buf.getvalue()

    def to_dict(self):
        return {
            "params": self.params.to_dict(),
            "p": self.params.p,
            "estimator": {
                "kind": self.estimator.kind,
                "tau": self.estimator.tau,
                "shots": self.estimator.shots,
                "sampling": self.estimator.sampling,
                "seed": self.estimator.seed,
            },
            "objective_value": self.objective_value,
            "normal_value": self.normal_value,
            "cvar_value": self.cvar_value,
            "optimal_cost": self.optimal_cost,
            "worst_cost": self.worst_cost,
            "uniform_cost": self.uniform_cost,
            "ar": self.ar,
            "ar_normal": self.ar_normal,
            "ar_cvar": self.ar_cvar,
            "ar_uniform": self.ar_uniform,
            "best_x": None if self.best_x is None else self.best_x.tolist(),
            "best_cost": self.best_cost,
            "mode_x": None if self.mode_x is None else self.mode_x.tolist(),
            "n_qubits": self.n_qubits,
            "n_encodings": self.n_encodings,
            "distribution": [
                {"x": x.tolist(), "cost": float(c), "probability": float(p)}
                for x, c, p in zip(self.solutions, self.solution_costs, self.solution_probs)
            ],
            "trace": list(self.trace),
            "meta": self.meta,
        }

    def to_json(self, **kwargs):
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)


def build_report(objective, params, model, stats, trace=(), meta=None):
    """Exact distribution over distinct solutions plus both estimator values."""
    circuit = objective.circuit
    probs = objective.probabilities(params)
    est = objective.estimator
    normal = estimate_normal(probs, circuit.costs)
    cvar = estimate_cvar(probs, circuit.costs, est.tau, objective.order)
    if est.sampling:
        rng = check_random_state(est.seed + 1)
        counts = sample_counts(probs, est.shots, rng)
        normal = sampled_normal(counts, circuit.costs)
        cvar = sampled_cvar(counts, circuit.costs, est.tau, objective.order)
    y = circuit.decoded()
    sols, inv = np.unique(y, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    sol_probs = np.bincount(inv, weights=probs, minlength=sols.shape[0])
    x = sols + model.L
    sol_costs = cost(model, x)
    if est.sampling:
        seen = np.bincount(inv, weights=counts, minlength=sols.shape[0]) > 0
    else:
        seen = sol_probs * est.shots >= 1.0
    cand = np.flatnonzero(seen)
    k = cand[np.argmin(sol_costs[cand])]
    objective_value = cvar if est.kind == "cvar" else normal
    return RunReport(
        params=params,
        estimator=est,
        objective_value=float(objective_value),
        normal_value=float(normal),
        cvar_value=float(cvar),
        optimal_cost=stats.best,
        worst_cost=stats.worst,
        uniform_cost=stats.uniform_mean,
        solutions=x,
        solution_costs=sol_costs,
        solution_probs=sol_probs,
        best_x=x[k],
        best_cost=float(sol_costs[k]),
        mode_x=x[int(np.argmax(sol_probs))],
        trace=list(trace),
        n_qubits=circuit.layout.n_qubits,
        n_encodings=circuit.size,
        meta=dict(meta or {}),
    )


def auto_eta(costs):
    """Scale that maps the spread of feasible costs to one."""
    span = float(np.max(costs) - np.min(costs))
    return 1.0 / span if span > 0 else 1.0


class QuasiBinaryQAOA(BaseEstimator):
    """Hard-constraint QAOA for an :class:`~qbqaoa.problem.IntegerModel`.

    Parameters
    ----------
    p : int
        Number of layers.
    scheduler : {"sample20", "ols", "iols", "iqaoa"}
    estimator : {"cvar", "normal", "exact"}
    tau : float
        Tail rate of the CVaR estimator.
    shots : int
        Measurements per evaluation in sampling mode; also sets the
        probability floor ``1/shots`` for reporting the best solution in
        exact mode.
    sampling : bool
        Estimate from multinomial shots instead of the exact distribution.
    eta : float or "auto"
        Cost Hamiltonian scale; ``"auto"`` normalizes the feasible cost
        spread to one.
    budget : int
        COBYLA evaluations per refinement.
    n_starts : int
        Random starts for ``sample20``.
    seed : int

    Attributes
    ----------
    params_ : QaoaParams
    report_ : RunReport
    layout_ : QubitLayout
    levels_ : list of OptimizeResult
        One entry per depth for the iterative schedulers.
    """

    def __init__(
        self,
        p=1,
        scheduler="iqaoa",
        estimator="cvar",
        tau=0.05,
        shots=100_000,
        sampling=False,
        eta="auto",
        budget=1000,
        n_starts=20,
        rhobeg=0.5,
        seed=0,
    ):
        self.p = p
        self.scheduler = scheduler
        self.estimator = estimator
        self.tau = tau
        self.shots = shots
        self.sampling = sampling
        self.eta = eta
        self.budget = budget
        self.n_starts = n_starts
        self.rhobeg = rhobeg
        self.seed = seed

    def _config(self):
        return EstimatorConfig(self.estimator, self.tau, self.shots, self.sampling, self.seed)

    def fit(self, model, y=None, y0=None):
        check_positive_int(self.p, "p")
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {self.scheduler!r}")
        shifted = shift(model)
        self.layout_ = build_layout(shifted.R)
        circuit = QaoaCircuit(model, self.layout_, eta=1.0)
        eta = auto_eta(circuit.costs) if self.eta == "auto" else float(self.eta)
        circuit.eta = eta
        self.eta_ = eta
        self.circuit_ = circuit
        y0 = greedy_allocation(shifted.R, shifted.D_hat) if y0 is None else np.asarray(y0)
        rng = np.random.default_rng(self.seed)
        objective = QaoaObjective(circuit, y0, self._config(), rng)
        if self.scheduler in ("iols", "iqaoa"):
            sched = schedule_iols if self.scheduler == "iols" else schedule_iqaoa
            self.levels_ = sched(objective, self.p, self.budget, rng, self.rhobeg)
            result = self.levels_[-1]
        else:
            result = run_schedule(objective, self.scheduler, self.p, self.budget, rng, self.n_starts, self.rhobeg)
            self.levels_ = [result]
        self.params_ = result.params
        self.stats_ = brute_force_stats(shifted, model)
        self.report_ = build_report(
            objective,
            result.params,
            model,
            self.stats_,
            trace=result.trace,
            meta={"scheduler": self.scheduler, "eta": eta, "budget": self.budget, "seed": self.seed},
        )
        return self

    def predict(self, model=None):
        """Best reported integer solution ``x`` of the fitted model."""
        check_is_fitted(self, "report_")
        return self.report_.best_x

    def score(self, model=None):
        check_is_fitted(self, "report_")
        return self.report_.ar


def evolve(model, layout, params, y0, eta=1.0, dense=True):
    """Final statevector after ``params.p`` phase/mixing layers from ``|y0>``.

    Returns all ``2**n`` amplitudes; with ``dense=False`` the simulation
    runs on the feasible subspace and is scattered back.
    """
    circuit = QaoaCircuit(model, layout, eta=eta, dense=dense)
    x = circuit.evolve(params.gamma, params.beta, y0)
    return circuit.to_dense(x) if not dense else x
