"""Monte Carlo harness: test functions, error laws and replicated fits."""

from __future__ import annotations

import configparser
import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .basis import null_space_dim
from .design import Dataset, build_design
from .errors import NoConvergenceWarning, TpsError
from .loss import LossSpec
from .select import default_grid, select_lambda
from .solver import FitOptions, fit

FUNCTIONS = ("f1", "f2", "f3")
ERRORS = ("gaussian", "t3", "skew_t3_1", "mix_gaussian", "slash")
FUNCTION_DIM = {"f1": 2, "f2": 2, "f3": 3}


class ConfigError(ValueError):
    """Malformed simulation configuration."""


def test_function(function_id: str, x):
    """Regression functions of the simulation study; vectorized over rows."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if function_id not in FUNCTION_DIM:
        raise ValueError(f"unknown test function {function_id!r}")
    d = FUNCTION_DIM[function_id]
    if arr.shape[1] != d:
        raise ValueError(f"{function_id} takes points of dimension {d}, got {arr.shape[1]}")
    if function_id == "f1":
        v = np.exp(-8.0 * (arr[:, 0] - 0.5) ** 2 - 8.0 * (arr[:, 1] - 0.5) ** 2)
    elif function_id == "f2":
        v = np.sin(2 * np.pi * arr[:, 0]) * np.cos(2 * np.pi * arr[:, 1])
    else:
        v = np.sum(arr ** 2, axis=1)
    return float(v[0]) if single else v


test_function.__test__ = False  # not a pytest test


@dataclass(frozen=True)
class MixtureParams:
    """Two-component Gaussian mixture: clean component with prob ``weight``."""

    weight: float = 0.85
    mean_clean: float = 0.0
    var_clean: float = 1.0
    mean_outlier: float = 10.0
    var_outlier: float = 0.01


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_errors(error_id: str, n: int, seed, mixture: Optional[MixtureParams] = None) -> np.ndarray:
    """Draw ``n`` errors; ``seed`` is an int, a sequence of ints or a Generator."""
    rng = _rng(seed)
    if error_id == "gaussian":
        return rng.standard_normal(n)
    if error_id == "t3":
        return rng.standard_t(3, n)
    if error_id == "skew_t3_1":
        z = rng.standard_normal(n)
        v = rng.chisquare(3, n)
        return (z + 1.0) / np.sqrt(v / 3.0)
    if error_id == "mix_gaussian":
        mp = mixture or MixtureParams()
        clean = rng.uniform(size=n) < mp.weight
        a = rng.normal(mp.mean_clean, np.sqrt(mp.var_clean), n)
        b = rng.normal(mp.mean_outlier, np.sqrt(mp.var_outlier), n)
        return np.where(clean, a, b)
    if error_id == "slash":
        z = rng.standard_normal(n)
        u = rng.uniform(size=n)
        return z / u
    raise ValueError(f"unknown error distribution {error_id!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    function_id: str
    error_id: str
    n: int = 100
    replications: int = 100
    estimators: tuple = (LossSpec("square"),)
    m: int = 2
    lambda_rule: Union[str, float] = "rcv"
    seed: int = 0
    mixture: MixtureParams = MixtureParams()
    workers: int = 1

    def __post_init__(self):
        if self.function_id not in FUNCTIONS:
            raise ConfigError(f"unknown function {self.function_id!r}")
        if self.error_id not in ERRORS:
            raise ConfigError(f"unknown error distribution {self.error_id!r}")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.n <= null_space_dim(self.m, self.d):
            raise ConfigError(f"n={self.n} too small for m={self.m}, d={self.d}")
        if isinstance(self.lambda_rule, str):
            if self.lambda_rule not in ("rcv", "oracle"):
                raise ConfigError("lambda rule must be 'rcv', 'oracle' or a positive number")
        elif not self.lambda_rule > 0:
            raise ConfigError("fixed lambda must be positive")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        object.__setattr__(self, "estimators", tuple(self.estimators))

    @property
    def d(self) -> int:
        return FUNCTION_DIM[self.function_id]


@dataclass(frozen=True, eq=False)
class EstimatorSummary:
    label: str
    mses: np.ndarray
    mean: float
    se: float
    n_failed: int


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    config: ScenarioConfig
    summaries: tuple = field(default_factory=tuple)

    def __getitem__(self, label: str) -> EstimatorSummary:
        for s in self.summaries:
            if s.label == label:
                return s
        raise KeyError(label)


ErrorSampler = Callable[[str, int, np.random.Generator], np.ndarray]


def _fit_one(data, truth, config, loss, design):
    rule = config.lambda_rule
    if rule == "rcv":
        model = select_lambda(data, config.m, loss, design=design).model
    elif rule == "oracle":
        best = np.inf
        for lam in default_grid(data, config.m):
            try:
                cand = fit(data, config.m, float(lam), loss, design=design)
            except TpsError:
                continue
            err = float(np.mean((data.responses - cand.final_residuals - truth) ** 2))
            if err < best:
                best = err
        if not np.isfinite(best):
            raise TpsError("no grid point could be fitted")
        return best
    else:
        model = fit(data, config.m, float(rule), loss, design=design)
    fitted = data.responses - model.final_residuals
    return float(np.mean((fitted - truth) ** 2))


def replicate(config: ScenarioConfig, r: int,
              error_sampler: Optional[ErrorSampler] = None) -> np.ndarray:
    """MSE of every estimator on replication ``r``; NaN marks a failed fit."""
    rng = _rng([config.seed, r])
    x = rng.uniform(size=(config.n, config.d))
    truth = test_function(config.function_id, x)
    if error_sampler is None:
        eps = sample_errors(config.error_id, config.n, rng, config.mixture)
    else:
        eps = np.asarray(error_sampler(config.error_id, config.n, rng), dtype=float)
    data = Dataset(x, truth + eps)
    out = np.full(len(config.estimators), np.nan)
    try:
        design = build_design(data, config.m)
    except TpsError:
        return out
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergenceWarning)
        for k, loss in enumerate(config.estimators):
            try:
                out[k] = _fit_one(data, truth, config, loss, design)
            except TpsError:
                pass
    return out


def _replicate_star(args):
    return replicate(*args)


def run_scenario(config: ScenarioConfig,
                 error_sampler: Optional[ErrorSampler] = None) -> ScenarioResult:
    """Run all replications of one scenario and summarize MSEs per estimator.

    Replication ``r`` draws from a Philox stream keyed by ``(seed, r)``, so the
    result does not depend on ``workers``. Failed fits are excluded from the
    mean and counted in ``n_failed``.
    """
    jobs = [(config, r, error_sampler) for r in range(config.replications)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            rows = list(pool.map(_replicate_star, jobs))
    else:
        rows = [_replicate_star(j) for j in jobs]
    table = np.vstack(rows)

    summaries = []
    for k, loss in enumerate(config.estimators):
        col = table[:, k]
        ok = col[np.isfinite(col)]
        mean = float(np.mean(ok)) if ok.size else np.nan
        se = float(np.std(ok, ddof=1) / np.sqrt(ok.size)) if ok.size > 1 else np.nan
        summaries.append(EstimatorSummary(label=loss.label, mses=col, mean=mean, se=se,
                                          n_failed=int(col.size - ok.size)))
    return ScenarioResult(config=config, summaries=tuple(summaries))


RESULT_COLUMNS = ("function", "error_dist", "estimator", "mean_mse_x100", "se_x100", "n_failed")


def write_results(results: Sequence[ScenarioResult], stream, delimiter: str = ",") -> None:
    w = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for res in results:
        for s in res.summaries:
            w.writerow([res.config.function_id, res.config.error_id, s.label,
                        f"{100 * s.mean:.6g}", f"{100 * s.se:.6g}", s.n_failed])


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]


def parse_config(text: str) -> list[ScenarioConfig]:
    """Parse an INI-style ``[simulation]`` config into one config per scenario.

    Keys: ``functions``, ``errors``, ``estimators`` (comma lists), ``n``,
    ``replications``, ``m``, ``lambda`` (``rcv``, ``oracle`` or a number),
    ``seed``, ``huber_c``, ``alpha``, ``workers``. An optional ``[mixture]``
    section overrides :class:`MixtureParams` fields.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if not cp.has_section("simulation"):
        raise ConfigError("missing [simulation] section")
    sec = cp["simulation"]
    known = {"functions", "function", "errors", "error", "estimators", "n", "replications",
             "m", "lambda", "seed", "huber_c", "alpha", "workers"}
    unknown = set(sec.keys()) - known
    if unknown:
        raise ConfigError(f"unknown keys in [simulation]: {sorted(unknown)}")
    try:
        functions = _split(sec.get("functions", sec.get("function", "f1")))
        errors = _split(sec.get("errors", sec.get("error", "gaussian")))
        huber_c = sec.getfloat("huber_c", 1.345)
        alpha = sec.getfloat("alpha", 0.5)
        estimators = tuple(LossSpec(e, huber_c=huber_c, quantile_alpha=alpha)
                           for e in _split(sec.get("estimators", "ls")))
        lam_text = sec.get("lambda", "rcv").strip().lower()
        lam = lam_text if lam_text in ("rcv", "oracle") else float(lam_text)
        common = dict(n=sec.getint("n", 100), replications=sec.getint("replications", 100),
                      m=sec.getint("m", 2), seed=sec.getint("seed", 0),
                      workers=sec.getint("workers", 1), estimators=estimators,
                      lambda_rule=lam)
        mixture = MixtureParams()
        if cp.has_section("mixture"):
            ms = cp["mixture"]
            fields = {k: ms.getfloat(k) for k in ms.keys()}
            mixture = MixtureParams(**fields)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return [ScenarioConfig(function_id=f, error_id=e, mixture=mixture, **common)
            for f in functions for e in errors]


def load_config(path) -> list[ScenarioConfig]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
