import math

import numpy as np
import pytest

from specshrink import TwoFactorModelSpec, generate_panel, mise, monte_carlo, true_spectrum
from specshrink.core import fourier_frequency, half_grid
from specshrink.errors import InsufficientSampleError, ValidationError
from specshrink.simulation import (
    DEFAULT_IDIOSYNCRATIC,
    DEFAULT_LOADINGS,
    ESTIMATORS,
    PRESETS,
    RunSpec,
    evaluate_run,
    lag0_covariance,
    ma2_spectrum,
    population_factor,
)

ZERO_LOADINGS = ((0.0, 0.0),) * 5


def test_default_parameters():
    spec = TwoFactorModelSpec()
    np.testing.assert_array_equal(spec.upsilon, [[.5871, .4510], [.5676, .9691], [.4645, .7268],
                                                 [.8691, .5511], [.5379, .4754]])
    assert spec.omega == (.3213, .3726, .2646, .4169, .3257)
    assert spec.loadings == DEFAULT_LOADINGS and spec.omega == DEFAULT_IDIOSYNCRATIC


def test_spec_validation():
    with pytest.raises(ValidationError):
        TwoFactorModelSpec(omega=(1.0, 2.0))
    with pytest.raises(ValidationError):
        TwoFactorModelSpec(omega=np.ones((5, 5)))
    with pytest.raises(ValidationError):
        TwoFactorModelSpec(loadings=((1.0,),))


def test_one_factor_degenerate_panel():
    spec = TwoFactorModelSpec(omega=(0.0,) * 5, second_factor_sigma=0.0)
    series, _ = generate_panel(spec, 200, 4)
    X = series.values
    ratio = X / X[0]
    np.testing.assert_allclose(ratio, ratio[:, :1] * np.ones((1, 200)), rtol=1e-10)


def test_pure_noise_panel():
    spec = TwoFactorModelSpec(loadings=ZERO_LOADINGS)
    series, _ = generate_panel(spec, 20000, 5)
    C = np.cov(series.values)
    np.testing.assert_allclose(C, np.diag(DEFAULT_IDIOSYNCRATIC), atol=0.02)


def test_sample_variance_matches_spectrum_integral():
    spec = TwoFactorModelSpec()
    T = 1024
    series, _ = generate_panel(spec, T, 8)
    w = 2 * np.pi * np.arange(4096) / 4096
    f = np.real(np.diagonal(true_spectrum(spec, w)[:, 1:, 1:], axis1=1, axis2=2))
    var = f.mean(axis=0) * 2 * np.pi
    np.testing.assert_allclose(var, np.diag(lag0_covariance(spec))[1:], rtol=1e-12)
    # Var(sample variance) ~ (2 / T) sum_h gamma(h)^2 = (4 pi / T) int f^2
    se = np.sqrt(4 * np.pi / T * (f**2).mean(axis=0) * 2 * np.pi)
    assert np.all(np.abs(series.values.var(axis=1) - var) < 3 * se)


def test_generation_is_seeded():
    a, _ = generate_panel(TwoFactorModelSpec(), 64, 9)
    b, _ = generate_panel(TwoFactorModelSpec(), 64, 9)
    np.testing.assert_array_equal(a.values, b.values)


def test_noise_only_spectrum_is_flat():
    spec = TwoFactorModelSpec(loadings=ZERO_LOADINGS)
    F = true_spectrum(spec, np.array([0.3, 1.0, 3.0]))[:, 1:, 1:]
    for M in F:
        np.testing.assert_allclose(M, np.diag(DEFAULT_IDIOSYNCRATIC) / (2 * math.pi))


def test_true_spectrum_real_symmetric():
    F = true_spectrum(TwoFactorModelSpec(), fourier_frequency(half_grid(256), 256))
    assert np.max(np.abs(F.imag)) < 1e-14
    np.testing.assert_allclose(F, np.swapaxes(F, 1, 2))


def test_market_row_by_linearity():
    spec = TwoFactorModelSpec()
    F = true_spectrum(spec, 0.7)
    f = F[1:, 1:]
    assert F[0, 0] == pytest.approx(f.sum() / 25)
    np.testing.assert_allclose(F[0, 1:], f.sum(axis=0) / 5)


def test_ma2_peak_at_quarter_circle():
    T = 1024
    ks = half_grid(T)
    f = ma2_spectrum(fourier_frequency(ks, T))
    assert ks[np.argmax(f)] == T // 4


def test_population_factor_is_regression_limit():
    spec = TwoFactorModelSpec()
    pf = population_factor(spec)
    b = []
    for seed in range(20):
        series, market = generate_panel(spec, 4096, seed)
        b.append(series.values @ market.values / (market.values @ market.values))
    np.testing.assert_allclose(np.mean(b, axis=0), pf.beta, atol=0.01)
    assert np.all(pf.delta >= 0)


def test_mise_zero_when_exact():
    F = true_spectrum(TwoFactorModelSpec(), fourier_frequency(half_grid(64), 64))
    assert mise(F, F, 64) == 0.0


def test_mise_identity_vs_zero():
    T, n = 64, 32
    est = np.broadcast_to(np.eye(5), (n, 5, 5))
    assert mise(est, np.zeros((n, 5, 5)), T) == pytest.approx(2 * math.pi / T * n * 5)


def test_mise_grid_mismatch():
    with pytest.raises(ValidationError):
        mise(np.zeros((3, 2, 2)), np.zeros((4, 2, 2)), 8)


def test_avg_periodogram_mise_decreases_with_span():
    spec = TwoFactorModelSpec()
    T = 1024
    truth = true_spectrum(spec, fourier_frequency(half_grid(T), T))[:, 1:, 1:]
    vals = {m: [] for m in (7, 19, 31)}
    for seed in range(100):
        series, market = generate_panel(spec, T, seed)
        for m in vals:
            vals[m].append(evaluate_run(series, market, truth, m, ("avg_periodogram",))["avg_periodogram"])
    med = [np.median(vals[m]) for m in (7, 19, 31)]
    assert med[0] > med[1] > med[2]


def test_monte_carlo_smoke_zero_loadings():
    spec = TwoFactorModelSpec(loadings=ZERO_LOADINGS)
    rep = monte_carlo(spec, M=2, T=128, m=7, master_seed=1)
    assert [r.estimator for r in rep.rows] == list(ESTIMATORS)
    for r in rep.rows:
        assert math.isfinite(r.mise_mean) and math.isfinite(r.mise_se) and r.M == 2
    assert rep.failures == []


def test_monte_carlo_needs_two_runs():
    with pytest.raises(InsufficientSampleError):
        monte_carlo(TwoFactorModelSpec(), M=1, T=64, m=5)


def test_monte_carlo_rejects_unknown_estimator():
    with pytest.raises(ValidationError):
        monte_carlo(TwoFactorModelSpec(), ["magic"], M=2, T=64, m=5)


def test_monte_carlo_parallel_matches_serial():
    kw = dict(M=4, T=128, m=7, sweep=("sigma2", [0.5, 1.5]), master_seed=3)
    a = monte_carlo(TwoFactorModelSpec(), **kw)
    b = monte_carlo(TwoFactorModelSpec(), n_jobs=2, **kw)
    assert a.to_csv() == b.to_csv()


def test_sweeps_share_random_numbers():
    # with identical sigma values the two sweep points see identical panels
    rep = monte_carlo(TwoFactorModelSpec(), M=3, T=64, m=5, sweep=("sigma2", [1.0, 1.0000000001]))
    np.testing.assert_allclose(rep.runs[("avg_periodogram", 1.0)], rep.runs[("avg_periodogram", 1.0000000001)],
                               rtol=1e-6)


def test_m_sweep_rows():
    rep = monte_carlo(TwoFactorModelSpec(), ["ddmse"], M=2, T=128, sweep=("m", [5, 9]))
    assert [(r.sweep_value, r.m) for r in rep.rows] == [(5, 5), (9, 9)]
    assert 0 <= rep.rows[0].zeta_median <= 1


def test_presets_parse():
    fig2 = RunSpec.from_dict(PRESETS["figure2"])
    assert fig2.T == 1024 and fig2.m == 19 and fig2.sweep[0] == "sigma2"
    fig3 = RunSpec.from_dict(PRESETS["figure3"])
    assert fig3.sweep == ("m", [7, 13, 19, 25, 31])


def test_runspec_roundtrip():
    rs = RunSpec.from_dict({"T": 64, "m": 5, "M": 2, "sigma2_sweep": [0.5, 1.0]})
    assert RunSpec.from_dict(rs.to_dict()) == rs


@pytest.mark.parametrize("bad, field", [
    ({"T": 64, "M": 2}, "'m'"),
    ({"T": 64, "m": 4, "M": 2}, "'m'"),
    ({"T": "x", "m": 5, "M": 2}, "'T'"),
    ({"T": 64, "m": 5, "M": 1}, "'M'"),
    ({"T": 64, "m": 5, "M": 2, "estimators": ["bogus"]}, "'estimators'"),
    ({"T": 64, "m": 5, "M": 2, "colour": 1}, "'colour'"),
    ({"T": 64, "m": 5, "M": 2, "sigma2": -1}, "'sigma2'"),
])
def test_runspec_errors_name_field(bad, field):
    with pytest.raises(ValidationError, match=field):
        RunSpec.from_dict(bad)
