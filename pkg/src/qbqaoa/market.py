"""Market data ingestion and mean-variance (Markowitz) relations.

Prices come in as a CSV with a ``date`` column followed by one closing-price
column per ticker. Returns are simple daily returns and the covariance uses
the unbiased ``N - 1`` denominator.
"""

import csv
import datetime as dt
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator

from ._validation import check_square, check_vector
from .exceptions import MalformedData, MissingValue, SingularCovariance

CONDITION_LIMIT = 1e12
PSD_TOLERANCE = 1e-10


@dataclass(frozen=True)
class PriceHistory:
    tickers: tuple
    dates: tuple
    prices: np.ndarray = field(repr=False)

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim != 2 or prices.shape != (len(self.dates), len(self.tickers)):
            raise MalformedData(
                f"price matrix shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if len(self.dates) < 2:
            raise MalformedData("a price history needs at least 2 dates")
        if len(set(self.tickers)) != len(self.tickers):
            raise MalformedData("duplicate ticker names")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise MalformedData("dates must be strictly increasing")
        if np.isnan(prices).any():
            raise MissingValue("price history contains missing values")
        if (prices <= 0).any():
            raise MalformedData("prices must be strictly positive")
        prices.setflags(write=False)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", prices)

    def returns(self):
        """Simple daily returns, one row per consecutive date pair."""
        p = self.prices
        return (p[1:] - p[:-1]) / p[:-1]


@dataclass(frozen=True)
class MarketMoments:
    expectation: np.ndarray
    covariance: np.ndarray
    tickers: tuple = ()

    def __post_init__(self):
        e = check_vector(self.expectation, "expectation")
        s = check_square(self.covariance, "covariance", size=e.shape[0])
        s = 0.5 * (s + s.T)
        if s.size and np.linalg.eigvalsh(s)[0] < -PSD_TOLERANCE:
            raise ValueError("covariance is not positive semidefinite")
        tickers = tuple(self.tickers) or tuple(f"asset{i}" for i in range(e.shape[0]))
        if len(tickers) != e.shape[0]:
            raise ValueError("ticker count does not match expectation length")
        e.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "expectation", e)
        object.__setattr__(self, "covariance", s)
        object.__setattr__(self, "tickers", tickers)

    @property
    def n_assets(self):
        return self.expectation.shape[0]

    def to_dict(self):
        return {
            "tickers": list(self.tickers),
            "expectation": self.expectation.tolist(),
            "covariance": self.covariance.tolist(),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        return cls(
            expectation=data["expectation"],
            covariance=data["covariance"],
            tickers=tuple(data.get("tickers", ())),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def subset(self, tickers):
        """Moments restricted to ``tickers`` (in the given order)."""
        idx = [self.tickers.index(t) for t in tickers]
        return MarketMoments(
            self.expectation[idx], self.covariance[np.ix_(idx, idx)], tuple(tickers)
        )


@dataclass(frozen=True)
class FrontierConstants:
    a: float
    b: float
    c: float

    @property
    def determinant(self):
        return self.a * self.c - self.b**2


def load_price_history(source):
    """Parse a closing-price CSV.

    ``source`` may be a path, a binary/text stream, or raw ``bytes``.
    Blank or non-numeric cells are rejected; nothing is imputed.
    """
    if isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8-sig")
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8-sig", newline="") as fh:
            text = fh.read()
    else:
        raw = source.read()
        text = raw.decode("utf-8-sig") if isinstance(raw, (bytes, bytearray)) else raw

    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise MalformedData("CSV needs a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0].lower() != "date":
        raise MalformedData("first column must be 'date' followed by ticker columns")
    tickers = header[1:]
    if any(not t for t in tickers):
        raise MalformedData("empty ticker name in header")

    dates, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MalformedData(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            dates.append(dt.date.fromisoformat(row[0].strip()))
        except ValueError as exc:
            raise MalformedData(f"line {lineno}: bad date {row[0]!r}") from exc
        line = []
        for ticker, cell in zip(tickers, row[1:]):
            cell = cell.strip()
            if not cell or cell.lower() in ("nan", "na", "null"):
                raise MissingValue(f"line {lineno}: missing price for {ticker}")
            try:
                line.append(float(cell))
            except ValueError as exc:
                raise MalformedData(f"line {lineno}: bad price {cell!r} for {ticker}") from exc
        values.append(line)

    return PriceHistory(tuple(tickers), tuple(dates), np.array(values, dtype=float))


def compute_moments(history):
    """Mean of simple daily returns and their sample covariance."""
    if len(history.dates) < 2:
        raise MalformedData("need at least 2 dates to form a return")
    r = history.returns()
    expectation = r.mean(axis=0)
    if r.shape[0] < 2:
        covariance = np.zeros((r.shape[1], r.shape[1]))
    else:
        covariance = np.cov(r, rowvar=False, ddof=1).reshape(r.shape[1], r.shape[1])
    return MarketMoments(expectation, covariance, history.tickers)


def frontier_constants(moments):
    """Return ``a = E'S^-1 E``, ``b = E'S^-1 1`` and ``c = 1'S^-1 1``."""
    sigma = moments.covariance
    n = moments.n_assets
    if n == 0:
        raise SingularCovariance("no assets")
    cond = np.linalg.cond(sigma)
    if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
        raise SingularCovariance(f"covariance condition number {cond:.3g} exceeds {CONDITION_LIMIT:g}")
    try:
        factor = scipy.linalg.cho_factor(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("covariance is not positive definite") from exc
    ones = np.ones(n)
    inv_e = scipy.linalg.cho_solve(factor, moments.expectation)
    inv_1 = scipy.linalg.cho_solve(factor, ones)
    e = moments.expectation
    return FrontierConstants(a=float(e @ inv_e), b=float(e @ inv_1), c=float(ones @ inv_1))


def _constants(arg):
    return arg if isinstance(arg, FrontierConstants) else frontier_constants(arg)


def risk_factor_from_target(moments, target):
    """Risk factor ``q`` whose unconstrained optimum has expected return ``target``.

    ``moments`` may also be a precomputed :class:`FrontierConstants`.
    """
    k = _constants(moments)
    denom = k.c * target - k.b
    if denom == 0 or abs(denom) <= 1e-15 * max(abs(k.c * target), abs(k.b)):
        raise ValueError("target equals b/c: the tangent is vertical and q is unbounded")
    return k.determinant / denom


def target_from_risk_factor(moments, q):
    k = _constants(moments)
    if q == 0:
        raise ValueError("risk factor must be non-zero")
    return k.b / k.c + k.determinant / (k.c * q)


def frontier_variance(moments, target):
    """Minimum portfolio variance at expected return ``target``."""
    k = _constants(moments)
    det = k.determinant
    if not det > 0:
        raise ValueError(f"degenerate frontier constants (ac - b^2 = {det:.3g})")
    return (k.a - 2 * k.b * target + k.c * target**2) / det


class MarkowitzMoments(BaseEstimator):
    """Estimate return moments from a price history.

    Parameters
    ----------
    ddof : int, default=1
        Delta degrees of freedom for the covariance.

    Attributes
    ----------
    expectation_ : ndarray of shape (n_assets,)
    covariance_ : ndarray of shape (n_assets, n_assets)
    moments_ : MarketMoments
    """

    def __init__(self, ddof=1):
        self.ddof = ddof

    def fit(self, X, y=None):
        if isinstance(X, PriceHistory):
            history = X
        else:
            prices = np.asarray(X, dtype=float)
            if prices.ndim != 2:
                raise ValueError("expected a 2-D price matrix (dates x assets)")
            history = PriceHistory(
                tuple(f"asset{i}" for i in range(prices.shape[1])),
                tuple(range(prices.shape[0])),
                prices,
            )
        r = history.returns()
        self.expectation_ = r.mean(axis=0)
        if r.shape[0] > self.ddof:
            cov = np.cov(r, rowvar=False, ddof=self.ddof).reshape(r.shape[1], r.shape[1])
        else:
            cov = np.zeros((r.shape[1], r.shape[1]))
        self.covariance_ = cov
        self.moments_ = MarketMoments(self.expectation_, cov, history.tickers)
        self.n_features_in_ = r.shape[1]
        return self

    def frontier_constants(self):
        return frontier_constants(self.moments_)
