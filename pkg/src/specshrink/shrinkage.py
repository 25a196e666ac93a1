"""Data-driven shrinkage of the averaged periodogram towards a one-factor target.

All array functions broadcast over leading frequency axes: a single
``(p, p)`` matrix and a stack ``(n, p, p)`` are both accepted.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    MarketSeries,
    MultivariateSeries,
    Target,
    center,
    check_span,
    condition_numbers,
    half_grid,
)
from .errors import (
    ConfigurationError,
    DegenerateGapError,
    InsufficientSampleError,
    ValidationError,
)
from .factor import FactorFit, build_target, fit_factor
from .periodogram import PeriodogramField, build_market, dft, raw_periodogram, smooth, window_indices

GAP_FLOOR_RTOL = 1e-12


class IntensityRule(str, enum.Enum):
    """How the plug-in intensity is formed.

    ``literal``: ``(p - 2 Re r) / (m g)`` with ``r_ii = p_ii`` on the diagonal.
    ``risk``: the stationary point of the quadratic risk, ``(p - Re r) / (m g)``,
    with the cross-spectral covariance estimate on the diagonal as well and
    both local moments corrected for their O(1/m) bias.
    """

    LITERAL = "literal"
    RISK = "risk"


@dataclass(frozen=True)
class ShrinkageDiagnostics:
    """Per-frequency plug-in quantities; arrays share the leading axis of ``indices``."""

    indices: np.ndarray
    p_total: np.ndarray
    r_total: np.ndarray
    g_total: np.ndarray
    zeta_raw: np.ndarray
    zeta: np.ndarray
    p_ij: np.ndarray
    r_ij: np.ndarray
    g_ij: np.ndarray
    degenerate: np.ndarray
    local_variance_total: np.ndarray = None  # uncorrected sum of p_ij, as used by the identity baseline


@dataclass(frozen=True)
class OracleParameters:
    pi: np.ndarray
    rho: np.ndarray
    gamma: np.ndarray
    zeta_star: np.ndarray
    zeta_finite: np.ndarray = None
    pi_ij: np.ndarray = field(repr=False, default=None)
    rho_ij: np.ndarray = field(repr=False, default=None)
    gamma_ij: np.ndarray = field(repr=False, default=None)


def local_variance_p(field: PeriodogramField, indices, m: int, f0_aug=None) -> tuple[np.ndarray, np.ndarray]:
    """Local variance of the panel periodogram ordinates within the window.

    Returns ``(p_ij, p_total)``; the market row and column are excluded.
    """
    m = check_span(m, field.T)
    win = window_indices(indices, m, field.T)
    I = field.matrices[win][..., 1:, 1:]
    if f0_aug is None:
        f0 = I.mean(axis=-3)
    else:
        f0 = np.asarray(f0_aug)[..., 1:, 1:]
    p_ij = np.mean(np.abs(I - f0[..., None, :, :]) ** 2, axis=-3)
    return p_ij, p_ij.sum(axis=(-2, -1))


def cov_estimate_r(fit: FactorFit | np.ndarray, f0_aug, p_diag=None,
                   diagonal: str = "local-variance", debias_span: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Plug-in target/periodogram covariance ``r_ij = b_i b_j f0_{0i} f0_{j0}``.

    With ``diagonal="local-variance"`` the diagonal is replaced by ``p_ii``
    (``p_diag`` may be the full ``p_ij`` array or just its diagonal); with
    ``"cross-spectral"`` the product formula is used for every entry.
    ``debias_span=m`` removes the ``f00 f_ji / m`` bias of the product of
    two averaged periodogram entries.
    """
    b = fit.slopes if isinstance(fit, FactorFit) else np.asarray(fit, dtype=float)
    f0_aug = np.asarray(f0_aug)
    p = b.shape[0]
    if f0_aug.shape[-1] != p + 1:
        raise ConfigurationError("averaged periodogram lacks the market row/column")
    prod = f0_aug[..., 0, 1:][..., :, None] * f0_aug[..., 1:, 0][..., None, :]  # f_{0i} f_{j0}
    if debias_span is not None and debias_span > 1:
        m = debias_span
        # E[f0i fj0] = a + c/m and E[f00 fji] = c + a/m, solved for a
        swap = f0_aug[..., 0, 0][..., None, None] * np.swapaxes(f0_aug[..., 1:, 1:], -1, -2)
        prod = m * (m * prod - swap) / (m * m - 1)
    r = np.outer(b, b) * prod
    if diagonal == "local-variance":
        if p_diag is None:
            raise ConfigurationError("local-variance diagonal needs p_diag")
        p_diag = np.asarray(p_diag)
        if p_diag.shape[-2:] == (p, p):
            p_diag = np.diagonal(p_diag, axis1=-2, axis2=-1)
        idx = np.arange(p)
        r[..., idx, idx] = p_diag
    elif diagonal != "cross-spectral":
        raise ConfigurationError(f"unknown diagonal convention {diagonal!r}")
    return r, r.sum(axis=(-2, -1))


def gap_g(f1, f0) -> tuple[np.ndarray, np.ndarray]:
    g = np.abs(np.asarray(f1) - np.asarray(f0)) ** 2
    return g, g.sum(axis=(-2, -1))


def gap_floor(f0, rtol: float = GAP_FLOOR_RTOL) -> np.ndarray:
    """Threshold below which the target is treated as coinciding with ``f0``."""
    f0 = np.asarray(f0)
    p = f0.shape[-1]
    tr = np.trace(f0, axis1=-2, axis2=-1).real
    return rtol * p**2 * tr**2


def raw_intensity(p_total, r_total, g_total, m: int, rule=IntensityRule.LITERAL) -> np.ndarray:
    c = 2.0 if IntensityRule(rule) is IntensityRule.LITERAL else 1.0
    return (np.asarray(p_total) - c * np.real(r_total)) / (m * np.asarray(g_total))


def intensity_zeta(p_total, r_total, g_total, m: int, clamp: bool = True, floor: float = 0.0,
                   rule=IntensityRule.LITERAL) -> float:
    """Plug-in shrinkage intensity at one frequency.

    The default rule is ``(p - 2 Re r) / (m g)``; ``rule="risk"`` uses
    ``(p - Re r) / (m g)``.
    """
    if not g_total > floor:
        raise DegenerateGapError(
            f"gap {g_total!r} at or below floor {floor!r}; use zero intensity"
        )
    z = float(raw_intensity(p_total, r_total, g_total, m, rule))
    return min(max(z, 0.0), 1.0) if clamp else z


def _as_weight(zeta, ndim_extra=2):
    z = np.asarray(zeta, dtype=float)
    return z.reshape(z.shape + (1,) * ndim_extra)


def ddmse(f0, f1, zeta) -> np.ndarray:
    """Convex combination ``zeta * f1 + (1 - zeta) * f0``."""
    z = np.asarray(zeta, dtype=float)
    if np.any((z < 0) | (z > 1)):
        warnings.warn("shrinkage intensity outside [0, 1]; result is not a convex combination",
                      RuntimeWarning, stacklevel=2)
    w = _as_weight(z)
    return w * np.asarray(f1) + (1.0 - w) * np.asarray(f0)


def ddsse_identity(f0, p_total, m: int, clamp: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Simplified shrinkage towards ``mu * Id`` with ``mu = trace(f0) / p``.

    The target/periodogram covariance correction is omitted. Returns the
    shrunk matrices and the intensity used.
    """
    f0 = np.asarray(f0)
    p = f0.shape[-1]
    eye = np.eye(p)
    mu = np.trace(f0, axis1=-2, axis2=-1).real / p
    target = _as_weight(mu) * eye
    _, g_id = gap_g(target, f0)
    floor = gap_floor(f0)
    ok = g_id > floor
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(ok, np.asarray(p_total, dtype=float) / (m * np.where(ok, g_id, 1.0)), 0.0)
    if clamp:
        z = np.clip(z, 0.0, 1.0)
    w = _as_weight(z)
    return w * target + (1.0 - w) * f0, z


def shrinkage_diagnostics(field: PeriodogramField, fit: FactorFit, f0_aug, f1, indices, m: int,
                          clamp: bool = True, rule=IntensityRule.RISK) -> ShrinkageDiagnostics:
    """Plug-in moments and intensities; ``p_total``/``r_total`` are the values entering the rule."""
    rule = IntensityRule(rule)
    f0 = np.asarray(f0_aug)[..., 1:, 1:]
    p_ij, p_tot = local_variance_p(field, indices, m, f0_aug)
    p_local = p_tot
    if rule is IntensityRule.LITERAL:
        r_ij, r_tot = cov_estimate_r(fit, f0_aug, p_ij)
    else:
        if m > 1:
            p_ij = p_ij * (m / (m - 1))
            p_tot = p_ij.sum(axis=(-2, -1))
        r_ij, r_tot = cov_estimate_r(fit, f0_aug, diagonal="cross-spectral", debias_span=m)
    g_ij, g_tot = gap_g(f1, f0)
    degenerate = ~(g_tot > gap_floor(f0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z_raw = np.where(degenerate, 0.0,
                         raw_intensity(p_tot, r_tot, np.where(degenerate, 1.0, g_tot), m, rule))
    z = np.clip(z_raw, 0.0, 1.0) if clamp else z_raw
    return ShrinkageDiagnostics(np.asarray(indices), p_tot, r_tot, g_tot, z_raw, z, p_ij, r_ij, g_ij, degenerate,
                                p_local)


@dataclass(frozen=True)
class SpectralEstimate:
    """Everything computed by :func:`estimate` on one panel."""

    indices: np.ndarray
    T: int
    span: int
    target: Target
    f0_aug: np.ndarray
    f1: np.ndarray
    estimate: np.ndarray
    diagnostics: ShrinkageDiagnostics
    fit: FactorFit | None = None

    @property
    def f0(self) -> np.ndarray:
        return self.f0_aug[..., 1:, 1:]

    def condition_numbers(self) -> dict[str, np.ndarray]:
        return {
            "f0": condition_numbers(self.f0),
            "f1": condition_numbers(self.f1),
            "fplus": condition_numbers(self.estimate),
        }


def estimate(series: MultivariateSeries, span: int, target: Target | str = Target.MARKET,
             market: MarketSeries | None = None, indices=None, clamp: bool = True,
             field: PeriodogramField | None = None, rule=IntensityRule.RISK,
             centered: bool = False) -> SpectralEstimate:
    """Averaged periodogram plus optional shrinkage at the given Fourier indices.

    ``series`` is centred here unless ``centered`` says it already is.
    ``market`` defaults to the cross-sectional mean. ``indices`` default to
    the half grid (0, pi].
    """
    target = Target(target)
    if not centered:
        series = center(series)
    span = check_span(span, series.T)
    if market is None:
        market = build_market(series)
    if market.T != series.T:
        raise ValidationError("market and panel lengths differ")
    if field is None:
        field = raw_periodogram(dft(series, market))
    if indices is None:
        indices = half_grid(series.T)
    indices = np.asarray(indices)
    f0_aug = smooth(field, indices, span)
    f0 = f0_aug[..., 1:, 1:]
    p = series.p

    if target is Target.MARKET:
        fit = fit_factor(series, market)
        f1 = build_target(fit.slopes, fit.idiosyncratic_variances, f0_aug[..., 0, 0])
        diag = shrinkage_diagnostics(field, fit, f0_aug, f1, indices, span, clamp, rule)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            est = ddmse(f0, f1, diag.zeta)
        return SpectralEstimate(indices, series.T, span, target, f0_aug, f1, est, diag, fit)

    p_ij, p_tot = local_variance_p(field, indices, span, f0_aug)
    mu = np.trace(f0, axis1=-2, axis2=-1).real / p
    f1 = _as_weight(mu) * np.eye(p)
    g_ij, g_tot = gap_g(f1, f0)
    zeros = np.zeros_like(p_tot)
    if target is Target.IDENTITY:
        est, z = ddsse_identity(f0, p_tot, span, clamp)
        with np.errstate(divide="ignore", invalid="ignore"):
            z_raw = np.where(g_tot > gap_floor(f0), p_tot / (span * g_tot), 0.0)
    else:
        f1 = f0.copy()
        g_ij, g_tot = np.zeros_like(p_ij), zeros
        est, z, z_raw = f0.copy(), zeros, zeros
    diag = ShrinkageDiagnostics(indices, p_tot, zeros.astype(complex), g_tot, z_raw, z, p_ij,
                                np.zeros_like(p_ij, dtype=complex), g_ij, ~(g_tot > gap_floor(f0)), p_tot)
    return SpectralEstimate(indices, series.T, span, target, f0_aug, f1, est, diag, None)


def oracle_parameters(true_f_aug, beta, f1_true, m: int, f0_target=None,
                      rule=IntensityRule.LITERAL) -> OracleParameters:
    """Oracle intensity from a known spectrum.

    ``true_f_aug`` is the augmented true spectrum (market at index 0),
    ``f1_true`` the population one-factor spectrum. ``f0_target`` stands in
    for the expected averaged periodogram and defaults to the true panel
    spectrum.

    With the literal rule ``pi_ij = |f_ij|^2`` and
    ``zeta_star = (pi - 2 Re rho) / (m gamma)``. With ``rule="risk"`` the
    periodogram variance is ``f_ii f_jj`` and ``zeta_star = (pi - Re rho) / (m gamma)``.
    ``zeta_finite`` keeps the ``Var(f1_hat - f0_hat)`` term in the
    denominator instead of dropping it, using the risk-rule moments.
    """
    rule = IntensityRule(rule)
    F = np.asarray(true_f_aug)
    beta = np.asarray(beta, dtype=float)
    f = F[..., 1:, 1:]
    f0_target = f if f0_target is None else np.asarray(f0_target)
    diag = np.real(np.diagonal(f, axis1=-2, axis2=-1))
    var_ij = diag[..., :, None] * diag[..., None, :]
    pi_ij = np.abs(f) ** 2 if rule is IntensityRule.LITERAL else var_ij
    rho_ij = np.outer(beta, beta) * F[..., 0, 1:][..., :, None] * F[..., 1:, 0][..., None, :]
    gamma_ij = np.abs(np.asarray(f1_true) - f0_target) ** 2
    pi, rho, gamma = pi_ij.sum(axis=(-2, -1)), rho_ij.sum(axis=(-2, -1)), gamma_ij.sum(axis=(-2, -1))
    if np.any(gamma <= 0):
        raise DegenerateGapError("one-factor model is not misspecified (gamma == 0)")
    c = 2.0 if rule is IntensityRule.LITERAL else 1.0
    zeta_star = (pi - c * np.real(rho)) / (m * gamma)

    # m Var(f1_hat_ij) ~ (beta_i beta_j f00)^2
    f00 = np.real(F[..., 0, 0])
    var1 = (np.sum(beta**2) * f00) ** 2
    var0, cov = var_ij.sum(axis=(-2, -1)), np.real(rho)
    zeta_finite = (var0 - cov) / (var0 + var1 - 2 * cov + m * gamma)
    return OracleParameters(pi, rho, gamma, zeta_star, zeta_finite, pi_ij, rho_ij, gamma_ij)


@dataclass(frozen=True)
class RiskCurve:
    z: np.ndarray
    risk: np.ndarray
    decomposed: np.ndarray

    @property
    def argmin(self) -> float:
        return float(self.z[np.argmin(self.risk)])

    def max_relative_discrepancy(self) -> float:
        return float(np.max(np.abs(self.risk - self.decomposed) / np.abs(self.risk)))


def risk_moments(f0_samples, f1_samples, target):
    """Empirical moments entering the risk decomposition, summed over entries."""
    A = np.asarray(f0_samples)
    B = np.asarray(f1_samples)
    if A.shape[0] < 2 or A.shape != B.shape:
        raise InsufficientSampleError("need at least two matched replicates")
    ma, mb = A.mean(axis=0), B.mean(axis=0)
    da, db = A - ma, B - mb
    var0 = np.mean(np.abs(da) ** 2, axis=0).sum()
    var1 = np.mean(np.abs(db) ** 2, axis=0).sum()
    cov = np.real(np.mean(db * np.conj(da), axis=0)).sum()
    bias0 = ma - np.asarray(target)
    bias1 = mb - np.asarray(target)
    return var0, var1, cov, bias0, bias1


def empirical_risk(f0_samples, f1_samples, target, z_grid) -> RiskCurve:
    """Monte Carlo risk of ``z f1 + (1 - z) f0`` against ``target``.

    ``decomposed`` evaluates the same quantity from variances, the real
    covariance and the bias terms; with ``target`` equal to the replicate
    mean of ``f0`` it reduces to the textbook form with bias ``z^2 |E f1 - E f0|^2``.
    """
    A = np.asarray(f0_samples)
    B = np.asarray(f1_samples)
    var0, var1, cov, bias0, bias1 = risk_moments(A, B, target)
    z = np.asarray(z_grid, dtype=float)
    direct = np.empty_like(z)
    decomposed = np.empty_like(z)
    tgt = np.asarray(target)
    for n, zz in enumerate(z):
        diff = zz * B + (1.0 - zz) * A - tgt
        direct[n] = np.mean(np.sum(np.abs(diff) ** 2, axis=(-2, -1)))
        bias = np.sum(np.abs(zz * bias1 + (1.0 - zz) * bias0) ** 2)
        decomposed[n] = zz**2 * var1 + (1 - zz) ** 2 * var0 + 2 * zz * (1 - zz) * cov + bias
    return RiskCurve(z, direct, decomposed)


def risk_minimizer(f0_samples, f1_samples, target) -> float:
    """Unconstrained minimiser of the empirical risk parabola."""
    var0, var1, cov, bias0, bias1 = risk_moments(f0_samples, f1_samples, target)
    # R(z) = a z^2 + b z + c
    d = bias1 - bias0
    a = var1 + var0 - 2 * cov + np.sum(np.abs(d) ** 2)
    b = -2 * var0 + 2 * cov + 2 * np.real(np.sum(d * np.conj(bias0)))
    return float(-b / (2 * a))
