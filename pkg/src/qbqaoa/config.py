"""Experiment configuration files.

A config is a YAML (or JSON) mapping. Keys and defaults:

=============  ===========================================================
experiment     ``solve``, ``instance``, ``iterate``, ``mixability`` or
               ``sweep-qubits``
price_file     closing-price CSV; omit to use the bundled six-stock inputs
moments_file   moments JSON written by ``qbqaoa moments`` (instead of prices)
tickers        list of tickers to keep (default: all); must not be empty
alpha          precision, ``1/alpha`` integral (0.5)
bounds         ``[l, u]`` weight bounds (``[-1, 1]``)
total          weight sum (1.0)
q / mu         risk factor, or target return converted to one
p              depth, or a list of depths (8)
scheduler      ``sample20``, ``ols``, ``iols``, ``iqaoa``, or a list (``iqaoa``)
estimator      ``normal``, ``cvar`` or ``exact`` (``cvar``)
tau            CVaR tail rate (0.05)
K              shots (100000)
sampling       estimate from shots instead of the exact distribution (false)
eta            cost scale, number or ``auto`` (``auto``)
budget         COBYLA evaluations per optimization (1000)
lambda         iteration factor (0.5)
iterations     refinement iterations (4)
repetitions    repeated runs with seeds ``seed, seed+1, ...`` (1)
seed           base seed (0)
R, D_hat       ranges and sum for ``mixability`` ([20, 20], 20)
epsilon        mixability threshold (0.001)
angle_scale    factor on the mixability angle grid (1.0)
R_max          largest range in ``sweep-qubits`` (4096)
=============  ===========================================================
"""

from pathlib import Path

import yaml

from .datasets import INSTANCE1_RISK_FACTOR, NASDAQ_TICKERS, instance1_moments
from .exceptions import ConfigError
from .market import MarketMoments, compute_moments, load_price_history, risk_factor_from_target
from .problem import discretize
from .qaoa import SCHEDULERS

EXPERIMENTS = ("solve", "instance", "iterate", "mixability", "sweep-qubits")
ESTIMATORS = ("normal", "cvar", "exact")

DEFAULTS = {
    "experiment": "solve",
    "price_file": None,
    "moments_file": None,
    "tickers": None,
    "alpha": 0.5,
    "bounds": [-1.0, 1.0],
    "total": 1.0,
    "q": None,
    "mu": None,
    "p": 8,
    "scheduler": "iqaoa",
    "estimator": "cvar",
    "tau": 0.05,
    "K": 100_000,
    "sampling": False,
    "eta": "auto",
    "budget": 1000,
    "lambda": 0.5,
    "iterations": 4,
    "repetitions": 1,
    "seed": 0,
    "R": [20, 20],
    "D_hat": 20,
    "epsilon": 1e-3,
    "angle_scale": 1.0,
    "R_max": 4096,
}


def validate_config(raw):
    """Fill defaults and check values; returns a new dict."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {**DEFAULTS, **raw}
    if cfg["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    if cfg["tickers"] is not None:
        if not isinstance(cfg["tickers"], list) or not cfg["tickers"]:
            raise ConfigError("tickers must be a non-empty list")
        cfg["tickers"] = [str(t) for t in cfg["tickers"]]
    for s in cfg["scheduler"] if isinstance(cfg["scheduler"], list) else [cfg["scheduler"]]:
        if s not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {s!r}")
    if cfg["estimator"] not in ESTIMATORS:
        raise ConfigError(f"estimator must be one of {', '.join(ESTIMATORS)}")
    if not (isinstance(cfg["bounds"], list) and len(cfg["bounds"]) == 2):
        raise ConfigError("bounds must be [l, u]")
    cfg["bounds"] = [float(b) for b in cfg["bounds"]]
    if cfg["q"] is not None and cfg["mu"] is not None:
        raise ConfigError("give q or mu, not both")
    for key in ("repetitions", "iterations", "K", "budget", "R_max"):
        if not isinstance(cfg[key], int) or cfg[key] < 1:
            raise ConfigError(f"{key} must be a positive integer")
    depths = cfg["p"] if isinstance(cfg["p"], list) else [cfg["p"]]
    least = 0 if cfg["experiment"] == "mixability" else 1
    if not depths or any(not isinstance(d, int) or d < least for d in depths):
        raise ConfigError(f"p must be an integer >= {least} or a list of them")
    if cfg["experiment"] == "mixability" and isinstance(cfg["p"], list):
        raise ConfigError("mixability takes a single p")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if not 0 < cfg["tau"] <= 1:
        raise ConfigError("tau must be in (0, 1]")
    if not 0 < cfg["lambda"] < 1:
        raise ConfigError("lambda must be in (0, 1)")
    if cfg["eta"] != "auto":
        cfg["eta"] = float(cfg["eta"])
    for key in ("price_file", "moments_file"):
        if cfg[key] is not None:
            cfg[key] = str(cfg[key])
    return cfg


def load_config(path):
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return validate_config(raw or {})


def moments_from_config(cfg):
    """Market moments named by the config, restricted to ``tickers``."""
    if cfg["price_file"] is not None:
        moments = compute_moments(load_price_history(cfg["price_file"]))
    elif cfg["moments_file"] is not None:
        moments = MarketMoments.from_json(Path(cfg["moments_file"]).read_text())
    else:
        moments = instance1_moments()
    if cfg["tickers"] is not None:
        missing = sorted(set(cfg["tickers"]) - set(moments.tickers))
        if missing:
            raise ConfigError(f"tickers not in data: {', '.join(missing)}")
        moments = moments.subset(cfg["tickers"])
    return moments


def risk_factor(cfg, moments):
    if cfg["q"] is not None:
        return float(cfg["q"])
    if cfg["mu"] is not None:
        return risk_factor_from_target(moments, float(cfg["mu"]))
    if cfg["price_file"] is None and cfg["moments_file"] is None and tuple(moments.tickers) == NASDAQ_TICKERS:
        return INSTANCE1_RISK_FACTOR
    raise ConfigError("config needs q or mu")


def build_model(cfg):
    moments = moments_from_config(cfg)
    lo, hi = cfg["bounds"]
    return discretize(moments, risk_factor(cfg, moments), cfg["alpha"], lo, hi, cfg["total"])
