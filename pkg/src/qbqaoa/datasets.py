"""Built-in market inputs for the six-stock NASDAQ experiments.

``TABLE1_EXPECTATION`` holds the published mean daily simple returns of
AAPL, AMZN, GOOGL, MSFT, NVDA and TSLA (2022-12-02 to 2023-02-28). The
matching covariance was only published as a heat map, so
:func:`instance1_moments` pairs those means with an illustrative covariance
(hand-picked daily volatilities and correlations of the right magnitude).
Use :func:`qbqaoa.market.compute_moments` on the real closing prices when
they are available.
"""

import numpy as np

from .market import MarketMoments

NASDAQ_TICKERS = ("AAPL", "AMZN", "GOOGL", "MSFT", "NVDA", "TSLA")

TABLE1_EXPECTATION = np.array([0.134, 0.354, -1.582, -0.152, 6.261, 2.187]) * 1e-3

INSTANCE1_RISK_FACTOR = 18.415

_DAILY_VOL = np.array([0.019, 0.030, 0.025, 0.022, 0.034, 0.050])

_CORRELATION = np.array(
    [
        [1.00, 0.62, 0.60, 0.68, 0.55, 0.42],
        [0.62, 1.00, 0.64, 0.60, 0.58, 0.40],
        [0.60, 0.64, 1.00, 0.66, 0.54, 0.36],
        [0.68, 0.60, 0.66, 1.00, 0.57, 0.38],
        [0.55, 0.58, 0.54, 0.57, 1.00, 0.45],
        [0.42, 0.40, 0.36, 0.38, 0.45, 1.00],
    ]
)


def instance1_moments():
    """Table-1 expectations with the illustrative covariance."""
    cov = _CORRELATION * np.outer(_DAILY_VOL, _DAILY_VOL)
    return MarketMoments(TABLE1_EXPECTATION.copy(), cov, NASDAQ_TICKERS)
