"""Shrinkage estimation of multivariate spectral density matrices."""

from .core import (
    EstimatorConfig,
    MarketMode,
    MarketSeries,
    MultivariateSeries,
    SpectralMatrix,
    Target,
    center,
    condition_number,
    condition_numbers,
    half_grid,
    nearest_fourier,
)
from .factor import FactorFit, build_target, fit_factor, fit_idiosyncratic_variances, fit_slopes
from .periodogram import (
    DftPanel,
    PeriodogramField,
    averaged_periodogram,
    build_market,
    dft,
    raw_periodogram,
    smooth,
)
from .shrinkage import (
    IntensityRule,
    ShrinkageDiagnostics,
    SpectralEstimate,
    cov_estimate_r,
    ddmse,
    ddsse_identity,
    empirical_risk,
    estimate,
    gap_g,
    intensity_zeta,
    local_variance_p,
    oracle_parameters,
    risk_minimizer,
)
from .simulation import (
    MiseReport,
    RunSpec,
    TwoFactorModelSpec,
    generate_panel,
    mise,
    monte_carlo,
    population_factor,
    true_spectrum,
)

__version__ = "0.1.0"
