import math

import numpy as np
import pytest
from conftest import direct_dft
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from specshrink import (
    MarketMode,
    MarketSeries,
    MultivariateSeries,
    averaged_periodogram,
    build_market,
    center,
    dft,
    raw_periodogram,
    smooth,
)
from specshrink.errors import ConfigurationError, DomainError, IngestionError, ValidationError
from specshrink.periodogram import averaged_periodogram_at, periodogram_field
from specshrink.simulation import TwoFactorModelSpec, generate_panel


def _field(X, market=None):
    s = MultivariateSeries(X)
    mk = market if market is not None else build_market(s)
    return raw_periodogram(dft(s, mk))


def test_dft_zero_series():
    s = MultivariateSeries(np.zeros((2, 8)))
    assert np.all(dft(s, build_market(s)).coefficients == 0)


def test_dft_cosine_concentrates():
    T, k0 = 64, 5
    x = np.cos(2 * np.pi * k0 * np.arange(1, T + 1) / T)
    s = MultivariateSeries(x[None, :])
    d = dft(s, build_market(s)).coefficients[1]
    mask = np.ones(T, bool)
    mask[[k0, T - k0]] = False
    assert np.max(np.abs(d[mask])) < 1e-10
    assert abs(d[k0]) > 1.0


def test_dft_matches_direct_sum(rng):
    X = rng.normal(size=(3, 16))
    s = MultivariateSeries(X)
    panel = dft(s, build_market(s))
    for k in range(1, 17):
        np.testing.assert_allclose(panel.at(k)[1:], direct_dft(X, k), atol=1e-12, rtol=0)


def test_dft_position_zero_is_two_pi(rng):
    X = rng.normal(size=(2, 10))
    s = MultivariateSeries(X)
    panel = dft(s, build_market(s))
    np.testing.assert_allclose(panel.at(10), panel.coefficients[:, 0])


def test_market_length_mismatch():
    s = MultivariateSeries(np.ones((2, 8)))
    with pytest.raises(ValidationError):
        dft(s, MarketSeries(np.ones(7)))


def test_zero_dft_gives_zero_periodogram():
    F = _field(np.zeros((3, 6)))
    assert np.all(F.matrices == 0)


def test_periodogram_rank_one(rng):
    F = _field(rng.normal(size=(3, 128)))
    lam = np.linalg.eigvalsh(F.matrices[:, 1:, 1:])
    assert np.all(lam[:, -2] < 1e-10 * lam[:, -1])


@given(arrays(np.float64, (2, 24), elements=st.floats(-1e3, 1e3)))
@settings(max_examples=60, deadline=None)
def test_parseval(X):
    F = _field(X, MarketSeries(np.zeros(24)))
    lhs = np.real(np.einsum("kii->i", F.matrices))[1:]
    rhs = (X**2).sum(axis=1) / (2 * np.pi)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * max(1.0, rhs.max()))


def test_averaged_span_one_is_raw(rng):
    F = _field(rng.normal(size=(2, 32)))
    for k in (1, 7, 16, 32):
        np.testing.assert_array_equal(averaged_periodogram_at(F, k, 1).entries, F.matrices[k % 32])


def test_averaged_full_window_is_grand_mean(rng):
    T = 33
    F = _field(rng.normal(size=(2, T)))
    grand = F.matrices.mean(axis=0)
    out = smooth(F, np.arange(1, T + 1), T)
    np.testing.assert_allclose(out, np.broadcast_to(grand, out.shape), atol=1e-14)


def test_window_linearity_exact(rng):
    T, m = 40, 7
    F = _field(rng.normal(size=(3, T)))
    for k in (1, 2, 20, 39, 40):
        manual = sum(F.matrices[(k + j) % T] for j in range(-3, 4)) / m
        np.testing.assert_array_equal(averaged_periodogram_at(F, k, m).entries, manual)


def test_averaged_by_frequency_snaps(rng):
    F = _field(rng.normal(size=(2, 64)))
    a = averaged_periodogram(F, math.pi / 2 + 0.01, 5)
    assert a.index == 16
    np.testing.assert_array_equal(a.entries, averaged_periodogram_at(F, 16, 5).entries)


def test_even_span_rejected(rng):
    F = _field(rng.normal(size=(2, 16)))
    with pytest.raises(ConfigurationError):
        smooth(F, [1], 4)


@pytest.mark.parametrize("m", [1, 3, 9, 31])
def test_averaged_psd(rng, m):
    F = _field(rng.normal(size=(4, 64)))
    A = smooth(F, np.arange(1, 65), m)
    lam = np.linalg.eigvalsh(A)
    assert np.all(lam[:, 0] >= -1e-10 * lam[:, -1])


def test_conjugate_symmetry(rng):
    T = 50
    F = _field(rng.normal(size=(3, T)))
    ks = np.arange(1, T)
    np.testing.assert_allclose(smooth(F, T - ks, 5), np.conj(smooth(F, ks, 5)), atol=1e-10)


def test_white_noise_level_at_pi():
    T, m, sigma2 = 4096, 65, 2.0
    x = np.random.default_rng(7).normal(scale=math.sqrt(sigma2), size=T)
    F = _field(x[None, :])
    est = averaged_periodogram(F, math.pi, m).entries[1, 1].real
    assert abs(est - sigma2 / (2 * math.pi)) < 0.25 * sigma2 / (2 * math.pi)


def test_white_noise_coverage_over_seeds():
    T, m = 4096, 65
    hits = 0
    for s in range(100):
        x = np.random.default_rng(s).normal(size=T)
        est = averaged_periodogram(_field(x[None, :]), math.pi, m).entries[1, 1].real
        hits += abs(est - 1 / (2 * math.pi)) < 0.25 / (2 * math.pi)
    # at pi the window folds onto conjugate pairs, so only (m + 1) / 2 ordinates are
    # independent: relative sd ~ sqrt(2 / m) = 0.175 and the 25% band covers ~85%
    assert hits >= 75


def test_market_mean_can_vanish():
    X = np.array([[1.0, -1.0] * 4, [-1.0, 1.0] * 4])
    mk = build_market(MultivariateSeries(X))
    assert np.all(mk.values == 0)


def test_market_designated_column():
    X = np.array([[1.0, 2.0, 6.0], [0.0, 1.0, 0.0]])
    mk = build_market(MultivariateSeries(X), MarketMode.COLUMN, column=1)
    np.testing.assert_allclose(mk.values, [-2.0, -1.0, 3.0])
    assert mk.describe() == "col:1"


def test_market_column_out_of_range():
    with pytest.raises(DomainError):
        build_market(MultivariateSeries(np.ones((2, 4))), MarketMode.COLUMN, column=3)


def test_market_matches_direct_average():
    series, market = generate_panel(TwoFactorModelSpec(), 256, 3)
    direct = np.array([series.values[:, t].sum() / series.p for t in range(series.T)])
    np.testing.assert_allclose(build_market(series).values, direct, rtol=0, atol=1e-15)
    np.testing.assert_allclose(market.values, direct, rtol=0, atol=1e-15)


def test_external_market(tmp_path):
    s = MultivariateSeries(np.ones((2, 4)))
    mk = build_market(s, MarketMode.EXTERNAL, values=[1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(mk.values, [-1.5, -0.5, 0.5, 1.5])
    path = tmp_path / "m.csv"
    path.write_text("mkt\n1\n2\n3\n")
    with pytest.raises(IngestionError, match="length 3"):
        build_market(s, MarketMode.EXTERNAL, path=path)


def test_periodogram_field_centres(rng):
    X = rng.normal(loc=5.0, size=(2, 16))
    series, market, F = periodogram_field(MultivariateSeries(X))
    np.testing.assert_allclose(series.values, center(MultivariateSeries(X)).values)
    assert abs(F.matrices[0, 1, 1]) < 1e-20
