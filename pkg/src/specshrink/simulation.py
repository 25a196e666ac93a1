"""Two-factor data generator, analytic spectra and the MISE Monte Carlo harness."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import TWO_PI, MarketMode, MarketSeries, MultivariateSeries, Target, fourier_frequency, half_grid
from .errors import DomainError, InsufficientSampleError, ValidationError
from .shrinkage import ddsse_identity, estimate

DEFAULT_LOADINGS = (
    (0.5871, 0.4510),
    (0.5676, 0.9691),
    (0.4645, 0.7268),
    (0.8691, 0.5511),
    (0.5379, 0.4754),
)
DEFAULT_IDIOSYNCRATIC = (0.3213, 0.3726, 0.2646, 0.4169, 0.3257)

ESTIMATORS = ("avg_periodogram", "one_factor", "ddsse", "ddmse")
BURN_IN = 2


@dataclass(frozen=True)
class TwoFactorModelSpec:
    """``X_t = loadings @ (MA(2)_t, sigma2 * z_t) + eps_t`` with ``eps ~ N(0, diag(omega))``."""

    loadings: tuple = DEFAULT_LOADINGS
    omega: tuple = DEFAULT_IDIOSYNCRATIC
    ma2_coefficients: tuple = (0.0, -0.9)
    ma2_innovation_variance: float = 1.0
    second_factor_sigma: float = 1.0

    def __post_init__(self):
        L = np.asarray(self.loadings, dtype=float)
        om = np.asarray(self.omega, dtype=float)
        if om.ndim == 2:
            if np.any(om - np.diag(np.diag(om))):
                raise ValidationError("omega must be diagonal")
            om = np.diag(om)
        if L.ndim != 2 or L.shape[1] != 2:
            raise ValidationError(f"loadings must be p-by-2, got shape {L.shape}")
        if om.shape != (L.shape[0],):
            raise ValidationError("omega must have one entry per panel dimension")
        if np.any(om < 0):
            raise ValidationError("omega entries must be nonnegative")
        if len(self.ma2_coefficients) != 2:
            raise ValidationError("ma2_coefficients must be a pair")
        if not self.ma2_innovation_variance > 0:
            raise ValidationError("ma2_innovation_variance must be positive")
        if self.second_factor_sigma < 0:
            raise ValidationError("second_factor_sigma must be nonnegative")
        object.__setattr__(self, "loadings", tuple(tuple(float(x) for x in r) for r in L))
        object.__setattr__(self, "omega", tuple(float(x) for x in om))
        object.__setattr__(self, "ma2_coefficients", tuple(float(x) for x in self.ma2_coefficients))

    @property
    def p(self) -> int:
        return len(self.loadings)

    @property
    def upsilon(self) -> np.ndarray:
        return np.array(self.loadings)

    def with_sigma(self, sigma: float) -> "TwoFactorModelSpec":
        d = asdict(self)
        d["second_factor_sigma"] = float(sigma)
        return TwoFactorModelSpec(**d)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_panel(spec: TwoFactorModelSpec, T: int, rng_seed=None) -> tuple[MultivariateSeries, MarketSeries]:
    """Simulate T observations; the market is the cross-sectional mean."""
    if T <= BURN_IN:
        raise DomainError(f"T={T} must exceed the MA(2) burn-in of {BURN_IN}")
    rng = _rng(rng_seed)
    th1, th2 = spec.ma2_coefficients
    # draw order is fixed so sweeps over sigma2 reuse the same normals
    e = rng.standard_normal(T + BURN_IN) * math.sqrt(spec.ma2_innovation_variance)
    z = rng.standard_normal(T)
    eps = rng.standard_normal((spec.p, T)) * np.sqrt(np.asarray(spec.omega))[:, None]
    ma = e[2:] + th1 * e[1:-1] + th2 * e[:-2]
    factors = np.vstack([ma, spec.second_factor_sigma * z])
    X = spec.upsilon @ factors + eps
    return MultivariateSeries(X), MarketSeries(X.mean(axis=0), MarketMode.MEAN)


def ma2_spectrum(omega, theta=(0.0, -0.9), variance: float = 1.0) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    h = 1 + theta[0] * np.exp(-1j * w) + theta[1] * np.exp(-2j * w)
    return variance * np.abs(h) ** 2 / TWO_PI


def factor_spectra(spec: TwoFactorModelSpec, omega) -> np.ndarray:
    """Diagonal spectra of the two factors, shape ``(..., 2)``."""
    w = np.asarray(omega, dtype=float)
    f1 = ma2_spectrum(w, spec.ma2_coefficients, spec.ma2_innovation_variance)
    f2 = np.full_like(f1, spec.second_factor_sigma**2 / TWO_PI)
    return np.stack([f1, f2], axis=-1)


def _augment_market(f: np.ndarray) -> np.ndarray:
    """Append the cross-sectional mean as index 0 by linearity."""
    p = f.shape[-1]
    A = np.vstack([np.full((1, p), 1.0 / p), np.eye(p)])  # (p+1, p)
    return A @ f @ A.T


def true_spectrum(spec: TwoFactorModelSpec, omega) -> np.ndarray:
    """Augmented spectral matrix ``(..., p+1, p+1)``; index 0 is the market."""
    U = spec.upsilon
    fs = factor_spectra(spec, omega)
    f = np.einsum("ia,...a,ja->...ij", U, fs, U) + np.diag(spec.omega) / TWO_PI
    return _augment_market(f).astype(complex)


def lag0_covariance(spec: TwoFactorModelSpec) -> np.ndarray:
    """Augmented lag-zero covariance (market at index 0)."""
    th1, th2 = spec.ma2_coefficients
    var_ma = spec.ma2_innovation_variance * (1 + th1**2 + th2**2)
    U = spec.upsilon
    G = U @ np.diag([var_ma, spec.second_factor_sigma**2]) @ U.T + np.diag(spec.omega)
    return _augment_market(G)


@dataclass(frozen=True)
class PopulationFactor:
    beta: np.ndarray
    delta: np.ndarray

    def spectrum(self, market_spectrum) -> np.ndarray:
        f00 = np.real(np.asarray(market_spectrum))
        return np.multiply.outer(f00, np.outer(self.beta, self.beta)) + np.diag(self.delta)


def population_factor(spec: TwoFactorModelSpec) -> PopulationFactor:
    """Population analogue of the regression fit: slopes and residual level / 2 pi."""
    G = lag0_covariance(spec)
    beta = G[0, 1:] / G[0, 0]
    delta = (np.diag(G)[1:] - beta**2 * G[0, 0]) / TWO_PI
    return PopulationFactor(beta, np.maximum(delta, 0.0))


def mise(estimates, truth, T: int) -> float:
    """``(2 pi / T) * sum_k ||est_k - truth_k||_F^2`` over the supplied frequencies."""
    est = np.asarray(estimates)
    tru = np.asarray(truth)
    if est.shape != tru.shape:
        raise ValidationError(f"grid mismatch: {est.shape} vs {tru.shape}")
    return float(TWO_PI / T * np.sum(np.abs(est - tru) ** 2))


# --------------------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True)
class MiseRow:
    estimator: str
    sweep_value: float
    mise_mean: float
    mise_se: float
    M: int
    T: int
    m: int
    seed: int
    n_failed: int = 0
    zeta_median: float = float("nan")


@dataclass
class MiseReport:
    sweep_name: str
    rows: list[MiseRow]
    runs: dict = field(default_factory=dict, repr=False)  # (estimator, sweep) -> per-run MISE
    zetas: dict = field(default_factory=dict, repr=False)  # (estimator, sweep) -> per-run median zeta
    failures: list = field(default_factory=list, repr=False)

    COLUMNS = ("estimator", "sweep_value", "mise_mean", "mise_se", "M", "T", "m", "seed",
               "n_failed", "zeta_median")

    def row(self, estimator: str, sweep_value) -> MiseRow:
        for r in self.rows:
            if r.estimator == estimator and r.sweep_value == sweep_value:
                return r
        raise KeyError((estimator, sweep_value))

    def to_csv(self) -> str:
        from .io import fmt

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([r.estimator, fmt(r.sweep_value), fmt(r.mise_mean), fmt(r.mise_se), r.M, r.T, r.m,
                        r.seed, r.n_failed, fmt(r.zeta_median)])
        return buf.getvalue()


def run_seeds(master_seed: int, M: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(M)


def evaluate_run(series: MultivariateSeries, market: MarketSeries, truth: np.ndarray, m: int,
                 estimators: Sequence[str] = ESTIMATORS) -> dict:
    """MISE of each estimator on the half grid plus median intensities."""
    T = series.T
    res = estimate(series, m, Target.MARKET, market=market)
    out = {}
    if "avg_periodogram" in estimators:
        out["avg_periodogram"] = mise(res.f0, truth, T)
    if "one_factor" in estimators:
        out["one_factor"] = mise(res.f1, truth, T)
    if "ddmse" in estimators:
        out["ddmse"] = mise(res.estimate, truth, T)
        out["zeta:ddmse"] = float(np.median(res.diagnostics.zeta))
    if "ddsse" in estimators:
        est, z = ddsse_identity(res.f0, res.diagnostics.local_variance_total, m)
        out["ddsse"] = mise(est, truth, T)
        out["zeta:ddsse"] = float(np.median(z))
    return out


def _one_run(args):
    spec, T, sweep_name, sweep_values, m, seed, estimators = args
    results = {}
    try:
        if sweep_name == "m":
            series, market = generate_panel(spec, T, np.random.default_rng(seed))
            truth = true_spectrum(spec, fourier_frequency(half_grid(T), T))[..., 1:, 1:]
            for mv in sweep_values:
                results[mv] = evaluate_run(series, market, truth, int(mv), estimators)
        else:
            for sv in sweep_values:
                s = spec.with_sigma(sv)
                series, market = generate_panel(s, T, np.random.default_rng(seed))
                truth = true_spectrum(s, fourier_frequency(half_grid(T), T))[..., 1:, 1:]
                results[sv] = evaluate_run(series, market, truth, m, estimators)
        return results, None
    except Exception as exc:  # recorded and excluded from the means
        return None, f"{type(exc).__name__}: {exc}"


def monte_carlo(spec: TwoFactorModelSpec, estimators: Iterable[str] = ESTIMATORS, M: int = 200,
                T: int = 1024, m: int = 19, sweep: tuple[str, Sequence[float]] | None = None,
                master_seed: int = 0, n_jobs: int = 1) -> MiseReport:
    """Monte Carlo MISE comparison.

    ``sweep`` is ``("sigma2", values)`` or ``("m", values)``; without one the
    spec's own second-factor sigma is used. Run ``r`` uses the r-th child of
    ``SeedSequence(master_seed)`` for every sweep value, so sweeps share their
    random numbers.
    """
    if M < 2:
        raise InsufficientSampleError(f"need M >= 2 runs, got {M}")
    estimators = tuple(estimators)
    unknown = set(estimators) - set(ESTIMATORS)
    if unknown:
        raise ValidationError(f"unknown estimators {sorted(unknown)}")
    if sweep is None:
        sweep = ("sigma2", [spec.second_factor_sigma])
    sweep_name, values = sweep[0], [float(v) for v in sweep[1]]
    if sweep_name not in ("sigma2", "m"):
        raise ValidationError(f"unknown sweep {sweep_name!r}")
    if sweep_name == "m":
        values = [int(v) for v in values]
    seeds = run_seeds(master_seed, M)
    jobs = [(spec, T, sweep_name, values, m, s, estimators) for s in seeds]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            outcomes = list(ex.map(_one_run, jobs))
    else:
        outcomes = [_one_run(j) for j in jobs]

    report = MiseReport(sweep_name, [])
    ok = [o for o, _ in outcomes if o is not None]
    report.failures = [(i, err) for i, (o, err) in enumerate(outcomes) if o is None]
    n_failed = len(report.failures)
    for est in estimators:
        for v in values:
            vals = np.array([o[v][est] for o in ok])
            zkey = f"zeta:{est}"
            zs = np.array([o[v][zkey] for o in ok]) if zkey in (ok[0][v] if ok else {}) else np.array([])
            report.runs[(est, v)] = vals
            report.zetas[(est, v)] = zs
            n = len(vals)
            mean = float(vals.mean()) if n else float("nan")
            se = float(vals.std(ddof=1) / math.sqrt(n)) if n >= 2 else float("nan")
            report.rows.append(MiseRow(
                est, v, mean, se, n, T, int(v) if sweep_name == "m" else m, master_seed, n_failed,
                float(np.median(zs)) if zs.size else float("nan"),
            ))
    return report


# --------------------------------------------------------------------------- run specs

PRESETS = {
    "figure2": {
        "T": 1024,
        "m": 19,
        "sigma2_sweep": [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
        "M": 200,
        "master_seed": 2008,
        "estimators": list(ESTIMATORS),
    },
    "figure3": {
        "T": 1024,
        "m_sweep": [7, 13, 19, 25, 31],
        "sigma2": 1.0,
        "M": 200,
        "master_seed": 2008,
        "estimators": list(ESTIMATORS),
    },
}


@dataclass(frozen=True)
class RunSpec:
    model: TwoFactorModelSpec
    T: int
    m: int
    sweep: tuple
    M: int
    master_seed: int
    estimators: tuple

    MODEL_FIELDS = ("loadings", "omega", "ma2_coefficients", "ma2_innovation_variance", "second_factor_sigma")

    @classmethod
    def from_dict(cls, d: dict) -> "RunSpec":
        if not isinstance(d, dict):
            raise ValidationError("run spec must be a JSON object")
        known = set(cls.MODEL_FIELDS) | {"T", "m", "m_sweep", "sigma2", "sigma2_sweep", "M",
                                         "master_seed", "estimators"}
        for k in d:
            if k not in known:
                raise ValidationError(f"unknown run-spec field {k!r}", )

        def need(name, cast, default=None, check=lambda v: True):
            if name not in d:
                if default is None:
                    raise ValidationError(f"run-spec field {name!r} is required")
                return default
            try:
                v = cast(d[name])
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"run-spec field {name!r}: {exc}") from None
            if not check(v):
                raise ValidationError(f"run-spec field {name!r} has invalid value {d[name]!r}")
            return v

        def as_int(v):
            if isinstance(v, bool) or int(v) != v:
                raise ValueError(f"expected an integer, got {v!r}")
            return int(v)

        model_kw = {}
        for k in cls.MODEL_FIELDS:
            if k in d:
                model_kw[k] = d[k]
        if "sigma2" in d:
            model_kw["second_factor_sigma"] = need("sigma2", float, check=lambda v: v >= 0)
        try:
            model = TwoFactorModelSpec(**model_kw)
        except ValidationError as exc:
            raise ValidationError(f"run-spec model field: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"run-spec model field: {exc}") from None

        T = need("T", as_int, check=lambda v: v > BURN_IN)
        M = need("M", as_int, check=lambda v: v >= 2)
        seed = need("master_seed", as_int, 0, check=lambda v: v >= 0)
        ests = need("estimators", lambda v: tuple(str(x) for x in v), ESTIMATORS,
                    check=lambda v: len(v) > 0 and set(v) <= set(ESTIMATORS))
        odd = lambda v: v % 2 == 1 and 1 <= v <= T  # noqa: E731
        if "m_sweep" in d and "sigma2_sweep" in d:
            raise ValidationError("run-spec field 'm_sweep': only one sweep allowed alongside 'sigma2_sweep'")
        if "m_sweep" in d:
            ms = need("m_sweep", lambda v: [as_int(x) for x in v], check=lambda v: v and all(map(odd, v)))
            return cls(model, T, ms[0], ("m", ms), M, seed, ests)
        m = need("m", as_int, check=odd)
        if "sigma2_sweep" in d:
            ss = need("sigma2_sweep", lambda v: [float(x) for x in v], check=lambda v: v and min(v) >= 0)
            return cls(model, T, m, ("sigma2", ss), M, seed, ests)
        return cls(model, T, m, ("sigma2", [model.second_factor_sigma]), M, seed, ests)

    def run(self, n_jobs: int = 1, master_seed: int | None = None) -> MiseReport:
        seed = self.master_seed if master_seed is None else master_seed
        return monte_carlo(self.model, self.estimators, self.M, self.T, self.m, self.sweep, seed, n_jobs)

    def to_dict(self) -> dict:
        d = {k: getattr(self.model, k) for k in self.MODEL_FIELDS}
        d.update(T=self.T, M=self.M, master_seed=self.master_seed, estimators=list(self.estimators))
        if self.sweep[0] == "m":
            d["m_sweep"] = list(self.sweep[1])
        else:
            d["m"] = self.m
            d["sigma2_sweep"] = list(self.sweep[1])
        return d
