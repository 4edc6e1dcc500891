"""Perturbed partial sums of transformed long-memory Gaussian sequences.

Three kinds of sums are simulated on exact fGn paths ``Y``:

* centered, ``sum [G(Y(n) + x_N) - E G(Y(n) + x_N)]``, with the expectation
  taken by quadrature and never from the sample;
* non-centered, ``sum G(Y(n) + x_N)`` for a mean-zero ``G``;
* sample-mean centered, ``sum G(Y(n) - mean(Y))`` for polynomial ``G``.

``predict_regime`` gives the fluctuation exponent the asymptotic theory
assigns to each case, and ``run_experiment`` estimates it from a dyadic
log-log regression of the spread of the sums against ``N``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from .config import DEFAULTS
from .errors import (
    BoundaryExcluded,
    ConstantFunction,
    DomainError,
    EmbeddingError,
    InputError,
    NonPolynomialSpec,
    SpecError,
)
from .gaussian_sim import FgnModel, FgnPath, sample_fgn_batch, variance_of_hermite_sums
from .hermite_core import (
    CONSTANT,
    FunctionSpec,
    default_rule,
    expand,
    gaussian_moment,
    hermite_rank,
    weierstrass,
)

_ATOL = 1e-9


def hermite_index(H: float, m: int) -> float:
    """Growth index of ``sum He_m(Y(n))``: ``max((H - 1) m + 1, 1/2)``."""
    return max((H - 1.0) * m + 1.0, 0.5)


def critical_order(H: float) -> int:
    """Largest ``m`` with ``H > 1 - 1/(2m)``, i.e. whose Hermite sums keep long memory."""
    bound = 1.0 / (2.0 * (1.0 - H))
    return max(math.ceil(bound) - 1, 0)


@dataclass(frozen=True)
class ShiftSchedule:
    """How the shift ``x_N`` depends on the sample size.

    ``zero``: no shift. ``power_law``: ``x_N = c * N**-beta`` with ``beta > 0``.
    ``sample_mean``: ``x_N = -mean(Y(1..N))``.
    """

    kind: str = "zero"
    c: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "power_law", "sample_mean"):
            raise SpecError(f"unknown shift schedule {self.kind!r}")
        if self.kind == "power_law" and not self.beta > 0:
            raise SpecError("power-law shifts need beta > 0 so that x_N -> 0")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def power_law(cls, c: float, beta: float):
        return cls("power_law", float(c), float(beta))

    @classmethod
    def sample_mean(cls):
        return cls("sample_mean")

    def shift(self, N: int) -> float:
        if self.kind == "power_law":
            return self.c * N ** (-self.beta)
        if self.kind == "zero":
            return 0.0
        raise ValueError("the sample-mean shift depends on the path")

    def to_dict(self) -> dict:
        if self.kind == "power_law":
            return {"kind": self.kind, "c": self.c, "beta": self.beta}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "ShiftSchedule":
        return cls(d.get("kind", "zero"), float(d.get("c", 0.0)), float(d.get("beta", 0.0)))


@dataclass(frozen=True)
class RegimePrediction:
    case_label: str
    fluctuation_exponent: float
    normalization: str
    limit_family: str
    critical_beta: float

    def to_dict(self) -> dict:
        return {
            "case_label": self.case_label,
            "fluctuation_exponent": self.fluctuation_exponent,
            "normalization": self.normalization,
            "limit_family": self.limit_family,
            "critical_beta": self.critical_beta,
        }


def _hermite_family(k: int) -> str:
    return "FractionalBM" if k == 1 else f"HermiteProcess({k})"


def predict_regime(H: float, k: int, schedule: ShiftSchedule, centered: bool = True) -> RegimePrediction:
    """Fluctuation exponent and limit family of the perturbed sum.

    For a power-law shift the case is decided by comparing ``beta`` with the
    critical exponent; the zero shift counts as ``beta = inf``.
    """
    if not 0.5 < H < 1.0:
        raise DomainError(f"Hurst index must lie in (1/2, 1), got {H}")
    if int(k) != k or k < 1:
        raise DomainError(f"rank must be a positive integer, got {k}")
    k = int(k)
    if math.isclose(H, 1.0 - 1.0 / (2 * k), abs_tol=_ATOL):
        raise BoundaryExcluded(f"H = 1 - 1/(2k) = {H} is a logarithmic boundary case")
    central = H < 1.0 - 1.0 / (2 * k)
    tag = "CLT" if central else "NCLT"
    h_g = (H - 1.0) * k + 1.0
    beta = schedule.beta if schedule.kind == "power_law" else math.inf

    if schedule.kind == "sample_mean":
        crit = 1.0 / (2 * k) if central else 1.0 - H
        if central:
            return RegimePrediction("MeanCentered-CLT", 0.5, "N^{-1/2}", "BrownianMotion", crit)
        return RegimePrediction("MeanCentered-NCLT", h_g, "N^{-H_G}", "Mixture", crit)

    if centered:
        crit = (H - 0.5) / (k - 1) if central else 1.0 - H
        slow = H - beta * (k - 1)
        if math.isclose(beta, crit, abs_tol=_ATOL):
            return RegimePrediction(f"{tag}-b", 0.5 if central else h_g,
                                    "N^{-1/2}" if central else "N^{-H_G}", "Mixture", crit)
        if beta > crit:
            if central:
                return RegimePrediction("CLT-a", 0.5, "N^{-1/2}", "BrownianMotion", crit)
            return RegimePrediction("NCLT-a", h_g, "N^{-H_G}", _hermite_family(k), crit)
        return RegimePrediction(f"{tag}-c", slow, "N^{-H} x_N^{1-k}", "FractionalBM", crit)

    # non-centered sums of a mean-zero G: a drift of order N x_N^k competes
    crit = 1.0 / (2 * k) if central else 1.0 - H
    if math.isclose(beta, crit, abs_tol=_ATOL):
        return RegimePrediction(f"{tag}-b", 0.5 if central else h_g,
                                "N^{-1/2}" if central else "N^{-H_G}", "Mixture", crit)
    if beta > crit:
        if central:
            return RegimePrediction("CLT-a", 0.5, "N^{-1/2}", "BrownianMotion", crit)
        return RegimePrediction("NCLT-a", h_g, "N^{-H_G}", _hermite_family(k), crit)
    return RegimePrediction("Drift", 1.0 - beta * k, "N^{-1} x_N^{-k}", "DeterministicDrift", crit)


# sums -----------------------------------------------------------------------


def _counts(N: int, t_grid) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t <= 0) or np.any(t > 1):
        raise InputError("time points must lie in (0, 1]")
    return np.floor(N * t + 1e-9).astype(int)


def _cumulative_at(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """``sum(values[..., :K])`` for each ``K`` in ``counts``."""
    csum = np.concatenate([np.zeros(values.shape[:-1] + (1,)), np.cumsum(values, axis=-1)], axis=-1)
    return csum[..., counts]


def partial_sum_path(path: FgnPath, spec: FunctionSpec, x: float, centered: bool, t_grid=(1.0,)) -> np.ndarray:
    """``sum_{n <= [N t]} (G(Y(n) + x) - m)`` where ``m = E G(Z + x)`` if centered, else 0."""
    if not math.isfinite(x):
        raise InputError("shift must be finite")
    y = np.asarray(path.values, dtype=float)
    centering = weierstrass(spec, x, default_rule(spec)) if centered else 0.0
    return _cumulative_at(spec(y + x) - centering, _counts(len(y), t_grid))


def mean_zero_power_coefficients(spec: FunctionSpec) -> np.ndarray:
    """Power coefficients of ``G - E G(Z)``, with the mean taken from exact Gaussian moments."""
    if not spec.is_polynomial:
        raise NonPolynomialSpec(f"{spec.kind} is not a polynomial")
    a = np.array(spec.power_coefficients(), dtype=float)
    a[0] -= sum(a_j * gaussian_moment(j) for j, a_j in enumerate(a))
    return a


def _mean_centered_sums(paths: np.ndarray, a: np.ndarray, counts: np.ndarray) -> np.ndarray:
    paths = np.atleast_2d(paths)
    N = paths.shape[1]
    d = paths - paths.mean(axis=1, keepdims=True)
    out = np.zeros((paths.shape[0], len(counts)))
    power = np.ones_like(d)
    for j, a_j in enumerate(a):
        if j:
            power = power * d
        if a_j == 0.0:
            continue
        p_j = _cumulative_at(power, counts)
        if j == 1:
            # deviations from the full-sample mean sum to zero identically
            p_j[:, counts == N] = 0.0
        out += a_j * p_j
    return out


def sample_mean_centered_sum(path: FgnPath, spec: FunctionSpec, t_grid=(1.0,)) -> np.ndarray:
    """``sum_{n <= [N t]} G(Y(n) - mean(Y))`` for a polynomial ``G`` recentered to mean zero."""
    a = mean_zero_power_coefficients(spec)
    if np.all(a == 0.0):
        raise ConstantFunction("a constant G has no fluctuations to study")
    y = np.asarray(path.values, dtype=float)
    return _mean_centered_sums(y, a, _counts(len(y), t_grid))[0]


# experiments ------------------------------------------------------------------


@dataclass(frozen=True)
class RegimeExperiment:
    spec: FunctionSpec
    hurst: float
    schedule: ShiftSchedule = ShiftSchedule()
    centered: bool = True
    n_grid: tuple = DEFAULTS.n_grid
    replicates: int = DEFAULTS.replicates
    base_seed: int = DEFAULTS.base_seed
    name: str = ""
    tolerance: float = 0.05
    # results
    rank: int | None = None
    statistic: str | None = None
    table: tuple = ()
    estimated_exponent: float | None = None
    stderr: float | None = None
    ols_stderr: float | None = None
    skewness_at_largest_N: float | None = None
    prediction: RegimePrediction | None = None
    complete: bool | None = None
    error: str | None = None
    largest_sums: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 4:
            raise InputError("N grid needs at least 4 points")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InputError("N grid must be strictly increasing")
        if grid[0] < 2:
            raise InputError("N grid values must be at least 2")
        object.__setattr__(self, "n_grid", grid)
        if self.replicates < DEFAULTS.min_replicates:
            raise InputError(f"need at least {DEFAULTS.min_replicates} replicates, got {self.replicates}")
        if self.base_seed < 0:
            raise InputError("base seed must be non-negative")

    @property
    def statistic_name(self) -> str:
        # a non-centered sum carries a deterministic drift that only the
        # root mean square sees; the standard deviation would discard it
        return "sd" if self.centered and self.schedule.kind != "sample_mean" else "rms"

    def config_dict(self) -> dict:
        return {
            "name": self.name,
            "spec": self.spec.to_dict(),
            "hurst": self.hurst,
            "schedule": self.schedule.to_dict(),
            "centered": self.centered,
            "n_grid": list(self.n_grid),
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "tolerance": self.tolerance,
        }

    def to_dict(self) -> dict:
        d = self.config_dict()
        d.update(
            rank=self.rank,
            statistic=self.statistic,
            table=[dict(row) for row in self.table],
            estimated_exponent=self.estimated_exponent,
            stderr=self.stderr,
            ols_stderr=self.ols_stderr,
            skewness_at_largest_N=self.skewness_at_largest_N,
            prediction=self.prediction.to_dict() if self.prediction else None,
            complete=self.complete,
            error=self.error,
        )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RegimeExperiment":
        try:
            return cls(
                spec=FunctionSpec.from_dict(d["spec"]),
                hurst=float(d["hurst"]),
                schedule=ShiftSchedule.from_dict(d.get("schedule", {})),
                centered=bool(d.get("centered", True)),
                n_grid=tuple(d.get("n_grid", DEFAULTS.n_grid)),
                replicates=int(d.get("replicates", DEFAULTS.replicates)),
                base_seed=int(d.get("base_seed", DEFAULTS.base_seed)),
                name=str(d.get("name", "")),
                tolerance=float(d.get("tolerance", 0.05)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise SpecError(f"malformed experiment: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "RegimeExperiment":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SpecError(f"experiment is not valid JSON: {exc}") from exc


def _t1_sums(paths: np.ndarray, spec: FunctionSpec, x: float, offset: float) -> np.ndarray:
    return np.sum(spec(paths + x) - offset, axis=1)


def _experiment_sums(exp: RegimeExperiment, N: int, threads: int, chunk: int = 64) -> np.ndarray:
    model = FgnModel(exp.hurst, N)
    seeds = np.arange(exp.replicates) + exp.base_seed
    rule = default_rule(exp.spec)
    if exp.schedule.kind == "sample_mean":
        a = mean_zero_power_coefficients(exp.spec)
        counts = np.array([N])
    else:
        x = exp.schedule.shift(N)
        # centered: exact mean of the shifted function; otherwise enforce E G(Z) = 0
        offset = weierstrass(exp.spec, x if exp.centered else 0.0, rule)
    out = []
    for start in range(0, len(seeds), chunk):
        paths = sample_fgn_batch(model, seeds[start:start + chunk], threads)
        if exp.schedule.kind == "sample_mean":
            out.append(_mean_centered_sums(paths, a, counts)[:, 0])
        else:
            out.append(_t1_sums(paths, exp.spec, x, offset))
    return np.concatenate(out)


def spread(sums: np.ndarray, statistic: str) -> tuple[float, float]:
    """Standard deviation or root mean square of ``sums`` with a delta-method standard error."""
    sums = np.asarray(sums, dtype=float)
    R = len(sums)
    u = (sums - sums.mean()) ** 2 if statistic == "sd" else sums**2
    q = u.mean() * (R / (R - 1) if statistic == "sd" else 1.0)
    value = math.sqrt(q)
    se = float(np.std(u, ddof=1)) / math.sqrt(R) / (2.0 * value) if value > 0 else math.inf
    return value, se


def dyadic_slope(n_grid: Sequence[int], values: Sequence[float], errors: Sequence[float] | None = None):
    """OLS slope of ``log2 values`` on ``log2 N``.

    Returns ``(slope, propagated_se, residual_se)``; the propagated error
    pushes per-point standard errors of ``values`` through the OLS weights.
    """
    x = np.log2(np.asarray(n_grid, dtype=float))
    y = np.log2(np.asarray(values, dtype=float))
    fit = stats.linregress(x, y)
    propagated = math.nan
    if errors is not None:
        sy = np.asarray(errors, dtype=float) / (np.asarray(values, dtype=float) * math.log(2))
        w = (x - x.mean()) / np.sum((x - x.mean()) ** 2)
        propagated = float(math.sqrt(np.sum(w**2 * sy**2)))
    return float(fit.slope), propagated, float(fit.stderr)


def run_experiment(exp: RegimeExperiment, threads: int = 1) -> RegimeExperiment:
    """Simulate every ``N`` of the grid and fit the fluctuation exponent.

    Replicate ``r`` always uses seed ``base_seed + r``, so the result does not
    depend on ``threads``.
    """
    report = hermite_rank(expand(exp.spec, DEFAULTS.order, default_rule(exp.spec)))
    if report.hermite_rank == CONSTANT:
        raise ConstantFunction("a constant G has no fluctuations to study")
    k = report.hermite_rank
    prediction = predict_regime(exp.hurst, k, exp.schedule, exp.centered)
    statistic = exp.statistic_name
    rows, sums, error = [], None, None
    for N in exp.n_grid:
        try:
            sums = _experiment_sums(exp, N, threads)
        except EmbeddingError as e:
            error = str(e)
            break
        value, se = spread(sums, statistic)
        rows.append({
            "N": N,
            "sd": float(np.std(sums, ddof=1)),
            "rms": float(np.sqrt(np.mean(sums**2))),
            "mean": float(np.mean(sums)),
            "stat": value,
            "stderr": se,
            "skewness": float(stats.skew(sums, bias=False)),
        })
    result = replace(exp, rank=k, statistic=statistic, table=tuple(rows), prediction=prediction,
                     complete=error is None, error=error, largest_sums=sums)
    # an identically vanishing sum (e.g. a linear G under sample-mean centering) has no slope
    if len(rows) >= 2 and all(r["stat"] > 0 for r in rows):
        slope, se, ols_se = dyadic_slope([r["N"] for r in rows], [r["stat"] for r in rows],
                                         [r["stderr"] for r in rows])
        result = replace(result, estimated_exponent=slope, stderr=se, ols_stderr=ols_se,
                         skewness_at_largest_N=rows[-1]["skewness"])
    return result


def exact_hermite_exponent(H: float, m: int, n_grid: Sequence[int]) -> float:
    """Dyadic slope of the exact standard deviation of ``sum He_m(Y(n))``."""
    sd = [math.sqrt(variance_of_hermite_sums(H, m, N)) for N in n_grid]
    return dyadic_slope(n_grid, sd)[0]


# limit shape -----------------------------------------------------------------


@dataclass(frozen=True)
class LimitShapeReport:
    skewness: float
    excess_kurtosis: float
    jb_pvalue: float
    #: ``None`` when the predicted family makes no claim about shape
    consistent: bool | None

    def to_dict(self) -> dict:
        return {"skewness": self.skewness, "excess_kurtosis": self.excess_kurtosis,
                "jb_pvalue": self.jb_pvalue, "consistent": self.consistent}


def classify_limit(samples, prediction: RegimePrediction, leading_sign: float = 1.0,
                   alpha: float = 0.01, skew_threshold: float = 0.2) -> LimitShapeReport:
    """Moment-shape check of normalized sums against the predicted limit family.

    Gaussian families (Brownian motion, fBm) must not be rejected by
    Jarque-Bera at level ``alpha``. A second-order Hermite process has a
    skewed marginal whose sign follows the leading coefficient; higher
    orders only need to look non-Gaussian.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < DEFAULTS.min_replicates:
        raise InputError(f"need at least {DEFAULTS.min_replicates} samples, got {len(samples)}")
    skew = float(stats.skew(samples, bias=False))
    kurt = float(stats.kurtosis(samples, bias=False))
    p = float(stats.jarque_bera(samples).pvalue)
    family = prediction.limit_family
    if family in ("BrownianMotion", "FractionalBM"):
        consistent = p >= alpha
    elif family == "HermiteProcess(2)":
        consistent = math.copysign(1.0, leading_sign) * skew > skew_threshold
    elif family.startswith("HermiteProcess"):
        consistent = p < alpha
    else:
        consistent = None
    return LimitShapeReport(skew, kurt, p, consistent)
