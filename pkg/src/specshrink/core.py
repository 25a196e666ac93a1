"""Shared data types, Fourier-grid arithmetic and Hermitian-matrix utilities."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, ValidationError

TWO_PI = 2.0 * math.pi

# eigenvalue ratio below which a Hermitian matrix is reported as singular
SINGULAR_RATIO = 1e-14
HERMITIAN_RTOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True, order="C")  # fixed layout keeps reductions bitwise reproducible
    a.setflags(write=False)
    return a


def _check_finite(values: np.ndarray, what: str) -> None:
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        loc = tuple(int(v) for v in bad[0])
        if len(loc) == 2:
            raise ValidationError(
                f"{what}: non-finite entry at row {loc[0]}, column {loc[1]}"
            )
        raise ValidationError(f"{what}: non-finite entry at index {loc[0]}")


@dataclass(frozen=True)
class MultivariateSeries:
    """A p-by-T real panel; row i is dimension i, column t is time t."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2:
            raise ValidationError(f"panel must be 2-d, got shape {v.shape}")
        p, T = v.shape
        if p < 1 or T < 2:
            raise ValidationError(f"panel needs p >= 1 and T >= 2, got p={p}, T={T}")
        _check_finite(v, "panel")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]


class MarketMode(str, enum.Enum):
    MEAN = "mean-over-dimension"
    COLUMN = "designated-column"
    EXTERNAL = "external"


@dataclass(frozen=True)
class MarketSeries:
    """The univariate 'market' series that plays the role of index 0."""

    values: np.ndarray
    provenance: MarketMode = MarketMode.MEAN
    column: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        _check_finite(v, "market series")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    def describe(self) -> str:
        if self.provenance is MarketMode.COLUMN:
            return f"col:{self.column}"
        if self.provenance is MarketMode.EXTERNAL:
            return "external"
        return "mean"


@dataclass(frozen=True)
class SpectralMatrix:
    """A p-by-p Hermitian matrix attached to the Fourier frequency 2*pi*k/T."""

    entries: np.ndarray
    index: int
    T: int
    role: str = ""

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValidationError(f"spectral matrix must be square, got {e.shape}")
        object.__setattr__(self, "entries", _frozen(e))

    @property
    def frequency(self) -> float:
        return fourier_frequency(self.index, self.T)

    @property
    def p(self) -> int:
        return self.entries.shape[0]


class Target(str, enum.Enum):
    NONE = "none"
    MARKET = "market"
    IDENTITY = "identity"


@dataclass(frozen=True)
class EstimatorConfig:
    span: int
    target: Target = Target.MARKET
    clamp_intensity: bool = True
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))
        check_span(self.span)

    def validate_for(self, T: int) -> None:
        check_span(self.span, T)


def check_span(m: int, T: int | None = None) -> int:
    if int(m) != m or m < 1:
        raise ConfigurationError(f"smoothing span must be a positive integer, got {m!r}")
    m = int(m)
    if m % 2 == 0:
        raise ConfigurationError(f"smoothing span must be odd, got {m}")
    if T is not None and m > T:
        raise ConfigurationError(f"smoothing span {m} exceeds series length {T}")
    return m


def center(series: MultivariateSeries) -> MultivariateSeries:
    """Subtract each row's empirical mean."""
    v = series.values
    return MultivariateSeries(v - v.mean(axis=1, keepdims=True))


def fourier_frequency(k: int, T: int) -> float:
    return TWO_PI * k / T


def nearest_fourier(omega: float, T: int) -> tuple[int, float]:
    """Snap ``omega`` in (0, 2*pi] to the nearest Fourier frequency.

    Distance is measured on the circle so that the invariant
    ``|omega_tilde - omega| <= pi / T`` (mod 2*pi) holds everywhere, including
    just above zero where the nearest grid point is 2*pi itself. Ties go to the
    smaller index.
    """
    if T < 1:
        raise DomainError(f"T must be positive, got {T}")
    if not (0.0 < omega <= TWO_PI):
        raise DomainError(f"frequency {omega!r} outside (0, 2*pi]")
    x = omega * T / TWO_PI
    lo = int(math.floor(x))
    best_k, best_d = None, math.inf
    for k in (lo - 1, lo, lo + 1, lo + 2):
        kk = (k - 1) % T + 1
        d = abs(omega - fourier_frequency(kk, T))
        d = min(d, TWO_PI - d)
        if d < best_d - 1e-15 * TWO_PI or (abs(d - best_d) <= 1e-15 * TWO_PI and kk < best_k):
            best_k, best_d = kk, d
    return best_k, fourier_frequency(best_k, T)


def half_grid(T: int) -> np.ndarray:
    """Fourier indices k with 2*pi*k/T in (0, pi]."""
    return np.arange(1, T // 2 + 1)


def full_grid(T: int) -> np.ndarray:
    return np.arange(1, T + 1)


def check_hermitian(M: np.ndarray, rtol: float = HERMITIAN_RTOL) -> None:
    M = np.asarray(M)
    scale = np.max(np.abs(M), axis=(-2, -1), keepdims=True)
    gap = np.abs(M - np.conj(np.swapaxes(M, -1, -2)))
    if np.any(gap > rtol * np.maximum(scale, np.finfo(float).tiny)):
        raise ValidationError("matrix is not Hermitian within tolerance")


def condition_numbers(M: np.ndarray) -> np.ndarray:
    """Vectorised :func:`condition_number` over a ``(..., p, p)`` stack."""
    M = np.asarray(M)
    if isinstance(M, SpectralMatrix):  # pragma: no cover - defensive
        M = M.entries
    check_hermitian(M)
    lam = np.linalg.eigvalsh(M)
    lo, hi = lam[..., 0], lam[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = hi / lo
    singular = (lo <= 0) | (lo < SINGULAR_RATIO * hi) | (hi <= 0)
    return np.where(singular, np.inf, out)


def condition_number(M) -> float:
    """Largest over smallest eigenvalue; ``inf`` for (numerically) singular input."""
    if isinstance(M, SpectralMatrix):
        M = M.entries
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {M.shape}")
    return float(condition_numbers(M))
