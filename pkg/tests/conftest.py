import numpy as np
import pytest

from specshrink import MarketMode, MarketSeries, MultivariateSeries


def one_factor_panel(beta, sigma2, T: int, rng: np.random.Generator, theta2: float = -0.9):
    """Exact one-factor data: X_i = beta_i * x0 + eps_i with an MA(2) market x0."""
    beta = np.asarray(beta, dtype=float)
    e = rng.standard_normal(T + 2)
    x0 = e[2:] + theta2 * e[:-2]
    eps = rng.standard_normal((beta.size, T)) * np.sqrt(np.asarray(sigma2, dtype=float))[:, None]
    X = beta[:, None] * x0 + eps
    return MultivariateSeries(X), MarketSeries(x0, MarketMode.EXTERNAL)


def direct_dft(X: np.ndarray, k: int) -> np.ndarray:
    T = X.shape[-1]
    t = np.arange(1, T + 1)
    w = 2 * np.pi * k / T
    return (X * np.exp(-1j * w * t)).sum(axis=-1) / np.sqrt(2 * np.pi * T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
