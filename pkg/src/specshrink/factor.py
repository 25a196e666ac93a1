"""One-factor regression fit and the rank-one-plus-diagonal shrinkage target."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import TWO_PI, MarketSeries, MultivariateSeries, _frozen
from .errors import DegenerateRegressorError, NumericalConsistencyError, ValidationError


@dataclass(frozen=True)
class FactorFit:
    """Slopes ``b`` and idiosyncratic spectral levels ``D`` (variance / 2 pi)."""

    slopes: np.ndarray
    idiosyncratic_variances: np.ndarray
    market: MarketSeries | None = None

    def __post_init__(self):
        b = np.asarray(self.slopes, dtype=float).ravel()
        D = np.asarray(self.idiosyncratic_variances, dtype=float).ravel()
        if b.shape != D.shape:
            raise ValidationError("slopes and idiosyncratic variances differ in length")
        if np.any(D < 0):
            raise ValidationError("idiosyncratic variances must be nonnegative")
        object.__setattr__(self, "slopes", _frozen(b))
        object.__setattr__(self, "idiosyncratic_variances", _frozen(D))

    @property
    def p(self) -> int:
        return self.slopes.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "slopes": [float(x) for x in self.slopes],
                "idiosyncratic_variances": [float(x) for x in self.idiosyncratic_variances],
                "market_mode": self.market.describe() if self.market is not None else None,
            },
            indent=2,
        )

    def target(self, market_spectrum) -> np.ndarray:
        return build_target(self.slopes, self.idiosyncratic_variances, market_spectrum)


def fit_slopes(series: MultivariateSeries, market: MarketSeries) -> np.ndarray:
    """No-intercept least-squares slope of each row on the market."""
    x0 = market.values
    if x0.shape[0] != series.T:
        raise ValidationError("market and panel lengths differ")
    ss = float(x0 @ x0)
    if not ss > 0:
        raise DegenerateRegressorError("market series is identically zero")
    return series.values @ x0 / ss


def fit_idiosyncratic_variances(series: MultivariateSeries, market: MarketSeries, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    resid = series.values - b[:, None] * market.values[None, :]
    D = np.sum(resid**2, axis=1) / (TWO_PI * series.T)
    return np.maximum(D, 0.0)


def fit_factor(series: MultivariateSeries, market: MarketSeries) -> FactorFit:
    b = fit_slopes(series, market)
    return FactorFit(b, fit_idiosyncratic_variances(series, market, b), market)


def build_target(b, D, market_spectrum) -> np.ndarray:
    """``b b' f00(w) + diag(D)`` for a scalar or an array of market spectra.

    Returns a real array of shape ``(p, p)`` or ``(n, p, p)``.
    """
    b = np.asarray(b, dtype=float)
    D = np.asarray(D, dtype=float)
    f00 = np.asarray(market_spectrum)
    if np.iscomplexobj(f00):
        f00 = f00.real
    if np.any(f00 < -1e-12):
        raise NumericalConsistencyError(f"negative market spectrum {f00.min():.3g}")
    f00 = np.maximum(f00, 0.0)
    return np.multiply.outer(f00, np.outer(b, b)) + np.diag(D)
