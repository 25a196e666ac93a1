"""DFT, raw periodogram and boxcar-averaged periodogram.

The market series is carried along as row/column 0 of every object here, so
cross-spectra with the market come out of the same code path as the panel.
Arrays indexed by frequency use position ``k % T`` for Fourier index ``k``;
position 0 therefore holds the frequency 2*pi.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    TWO_PI,
    MarketMode,
    MarketSeries,
    MultivariateSeries,
    SpectralMatrix,
    _frozen,
    center,
    check_span,
    nearest_fourier,
)
from .errors import DomainError, IngestionError, ValidationError


@dataclass(frozen=True)
class DftPanel:
    """(p+1)-by-T DFT coefficients; row 0 is the market."""

    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _frozen(np.asarray(self.coefficients, dtype=complex)))

    @property
    def T(self) -> int:
        return self.coefficients.shape[1]

    @property
    def p(self) -> int:
        return self.coefficients.shape[0] - 1

    def at(self, k: int) -> np.ndarray:
        return self.coefficients[:, k % self.T]


@dataclass(frozen=True)
class PeriodogramField:
    """Rank-one periodogram matrices over the augmented index set {0, ..., p}."""

    matrices: np.ndarray  # shape (T, p+1, p+1)

    def __post_init__(self):
        object.__setattr__(self, "matrices", _frozen(np.asarray(self.matrices, dtype=complex)))

    @property
    def T(self) -> int:
        return self.matrices.shape[0]

    @property
    def p(self) -> int:
        return self.matrices.shape[1] - 1

    def at(self, k: int) -> SpectralMatrix:
        return SpectralMatrix(self.matrices[k % self.T], (k - 1) % self.T + 1, self.T, "periodogram")


def augment(series: MultivariateSeries, market: MarketSeries) -> np.ndarray:
    """Stack market (row 0) on top of the panel."""
    if market.T != series.T:
        raise ValidationError(
            f"market length {market.T} does not match panel length {series.T}"
        )
    return np.vstack([market.values[None, :], series.values])


def dft(series: MultivariateSeries, market: MarketSeries) -> DftPanel:
    """``d(w_k) = (2 pi T)^{-1/2} sum_{t=1}^T X_t exp(-i w_k t)`` for every k."""
    X = augment(series, market)
    T = X.shape[1]
    k = np.arange(T)
    # numpy's FFT sums over t = 0..T-1; the extra phase shifts to t = 1..T
    phase = np.exp(-1j * TWO_PI * k / T)
    d = np.fft.fft(X, axis=1) * phase / np.sqrt(TWO_PI * T)
    return DftPanel(d)


def raw_periodogram(dfts: DftPanel) -> PeriodogramField:
    d = dfts.coefficients.T  # (T, p+1)
    return PeriodogramField(d[:, :, None] * np.conj(d[:, None, :]))


def window_indices(indices, m: int, T: int) -> np.ndarray:
    """Array positions of the m ordinates centred on each Fourier index (wrapped mod T)."""
    h = (m - 1) // 2
    offsets = np.arange(-h, h + 1)
    return (np.asarray(indices)[..., None] + offsets) % T


def smooth(field: PeriodogramField, indices, m: int) -> np.ndarray:
    """Averaged periodogram at many Fourier indices; returns ``(n, p+1, p+1)``."""
    m = check_span(m, field.T)
    win = window_indices(indices, m, field.T)
    return field.matrices[win].mean(axis=-3)


def averaged_periodogram(field: PeriodogramField, omega: float, m: int) -> SpectralMatrix:
    """Boxcar average of m periodogram matrices around the Fourier frequency nearest omega."""
    k, _ = nearest_fourier(omega, field.T)
    return averaged_periodogram_at(field, k, m)


def averaged_periodogram_at(field: PeriodogramField, k: int, m: int) -> SpectralMatrix:
    m = check_span(m, field.T)
    win = window_indices(k, m, field.T)
    return SpectralMatrix(field.matrices[win].mean(axis=0), k, field.T, "averaged_periodogram")


def build_market(
    series: MultivariateSeries,
    mode: MarketMode | str = MarketMode.MEAN,
    column: int | None = None,
    values=None,
    path: str | Path | None = None,
) -> MarketSeries:
    """Construct the market series.

    ``column`` is 1-based. For external mode pass either an array via
    ``values`` or a single-column CSV via ``path``; the result is centred.
    """
    mode = MarketMode(mode)
    if mode is MarketMode.MEAN:
        return MarketSeries(series.values.mean(axis=0), mode)
    if mode is MarketMode.COLUMN:
        if column is None or not (1 <= column <= series.p):
            raise DomainError(f"market column {column!r} outside 1..{series.p}")
        row = series.values[column - 1]
        return MarketSeries(row - row.mean(), mode, column)
    if values is None:
        if path is None:
            raise IngestionError("external market needs values or a path")
        from .io import read_column_csv

        values = read_column_csv(path)
    v = np.asarray(values, dtype=float).ravel()
    if v.shape[0] != series.T:
        raise IngestionError(
            f"external market has length {v.shape[0]}, panel has T={series.T}"
        )
    return MarketSeries(v - v.mean(), mode)


def periodogram_field(series: MultivariateSeries, market: MarketSeries | None = None,
                      centered: bool = False) -> tuple[MultivariateSeries, MarketSeries, PeriodogramField]:
    """Centre (unless told the data already is), build the market, and return the field."""
    if not centered:
        series = center(series)
    if market is None:
        market = build_market(series)
    return series, market, raw_periodogram(dft(series, market))
