"""Uncertainty propagation: Monte Carlo and multilevel Monte Carlo.

The estimators target E[q] for a scalar quantity of interest q of a
simulated trajectory, under uniform parameter uncertainty and (optionally)
the process noise of the stochastic engine.  Levels are bucket sizes
dt_l = dt0 / 2^l; level differences are sampled on coupled trajectory
pairs sharing the parameter draw (and coupled noise), and the per-level
sample counts minimize total cost subject to a CLT variance constraint at
a prescribed confidence.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

from .bucket_engine import Trajectory, run_pull, run_push
from .lleap_engine import CoupledPair, RngStream, run_coupled_pair, run_lleap
from .model import (
    EPS,
    InventoryPolicy,
    ModelError,
    OrderStream,
    SimConfig,
    SupplyChainNetwork,
)

__all__ = [
    "QoISpec",
    "QoIVariant",
    "UqBlock",
    "Uniform",
    "ParamSpec",
    "Tolerances",
    "LevelEstimate",
    "RateEstimates",
    "MCResult",
    "MLMCResult",
    "DegenerateFit",
    "BudgetExceeded",
    "evaluate_qoi",
    "sample_parameters",
    "apply_parameters",
    "estimate_rates",
    "select_max_level",
    "optimal_samples",
    "mc_estimate",
    "mlmc_estimate",
    "ScenarioSampler",
    "ScreeningConfig",
]


class DegenerateFit(RuntimeError):
    """Rate regression impossible: too many vanishing screening statistics."""


class BudgetExceeded(RuntimeError):
    """Optimal allocation asks for more samples than the configured cap."""


# ---------------------------------------------------------------------------
# quantities of interest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QoISpec:
    """Scalar trajectory functional.

    ``deliveries_by``: cumulative delivered count of ``part`` at time
    ``horizon``.  ``delivery_time``: first time the delivered count reaches
    ``count``, censored at ``horizon`` when it never does.
    """

    kind: str
    part: int
    horizon: float
    count: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("deliveries_by", "delivery_time"):
            raise ModelError(f"unknown QoI kind {self.kind!r}")
        if self.kind == "delivery_time" and (self.count is None or self.count <= 0):
            raise ModelError("delivery_time needs a positive count")
        if self.horizon <= 0:
            raise ModelError("QoI horizon must be > 0")


@dataclass(frozen=True)
class QoIVariant:
    """Named QoI configuration of a scenario's uncertainty block."""

    name: str
    qoi: QoISpec
    stochastic: bool = False
    dt0: float = 32.0
    horizon: float | None = None  # simulation horizon override


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.hi < self.lo:
            raise ModelError(f"uniform needs lo <= hi, got ({self.lo}, {self.hi})")


@dataclass(frozen=True)
class ParamSpec:
    """One uncertain scalar: process capacity, process lead time (min=max),
    or initial inventory of a part."""

    target: str  # "capacity" | "lead" | "initial"
    index: int  # 1-based process id for capacity/lead, 0-based part for initial
    dist: Uniform

    def __post_init__(self) -> None:
        if self.target not in ("capacity", "lead", "initial"):
            raise ModelError(f"unknown parameter target {self.target!r}")


@dataclass(frozen=True)
class UqBlock:
    parameters: tuple[ParamSpec, ...]
    variants: tuple[QoIVariant, ...]

    def variant(self, name: str | None) -> QoIVariant:
        if name is None:
            return self.variants[0]
        for v in self.variants:
            if v.name == name:
                return v
        raise KeyError(f"no QoI variant named {name!r}")


def evaluate_qoi(traj: Trajectory, spec: QoISpec) -> float:
    """Evaluate the scalar QoI on a trajectory covering [0, spec.horizon]."""
    series = traj.delivered_series(spec.part)
    if spec.kind == "deliveries_by":
        if traj.horizon < spec.horizon - EPS:
            raise ModelError(
                f"trajectory ends at {traj.horizon}, before QoI horizon {spec.horizon}"
            )
        idx = int(np.searchsorted(traj.times, spec.horizon + EPS)) - 1
        return float(series[idx])
    hit = series >= spec.count - EPS
    if not hit.any():
        return float(spec.horizon)
    t = float(traj.times[int(np.argmax(hit))])
    return min(t, float(spec.horizon))


def sample_parameters(params: Sequence[ParamSpec], rng: np.random.Generator) -> np.ndarray:
    """Independent uniform draws, one per parameter, in declaration order."""
    return np.array([rng.uniform(p.dist.lo, p.dist.hi) for p in params])


def apply_parameters(
    net: SupplyChainNetwork,
    x0: np.ndarray,
    params: Sequence[ParamSpec],
    theta: np.ndarray,
) -> tuple[SupplyChainNetwork, np.ndarray]:
    """Bind a parameter draw to a network template and initial inventory."""
    if len(params) != len(theta):
        raise ModelError("theta length does not match parameter list")
    caps: dict[int, float] = {}
    leads: dict[int, float] = {}
    x = np.asarray(x0, dtype=np.float64).copy()
    for p, v in zip(params, theta):
        if p.target == "capacity":
            caps[p.index] = float(v)
        elif p.target == "lead":
            leads[p.index] = float(v)
        else:
            x[p.index] = float(v)
    if not caps and not leads:
        return net, x
    return net.with_parameters(capacities=caps, leads=leads), x


# ---------------------------------------------------------------------------
# tolerances and allocation formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tolerances:
    """Total error budget split between bias and statistical error.

    eps_b = sqrt(split)*tol bounds |E q - E q_L|; the statistical part is
    controlled in probability at the given confidence, i.e. the estimator
    variance is held below eps_s_bar_sq = (1-split)*tol^2 / z^2 with
    z the two-sided normal quantile of the confidence level.
    """

    tol: float
    split: float = 0.5
    confidence: float = 0.95

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ModelError("tol must be > 0")
        if not 0 < self.split < 1:
            raise ModelError("split must lie in (0, 1)")
        if not 0 < self.confidence < 1:
            raise ModelError("confidence must lie in (0, 1)")

    @property
    def z(self) -> float:
        return float(norm.ppf((1.0 + self.confidence) / 2.0))

    @property
    def eps_b(self) -> float:
        return math.sqrt(self.split) * self.tol

    @property
    def eps_s(self) -> float:
        return math.sqrt(1.0 - self.split) * self.tol

    @property
    def eps_s_bar_sq(self) -> float:
        return self.eps_s**2 / self.z**2


@dataclass
class LevelEstimate:
    """Per-level statistics of the difference q_l - q_{l-1} (q_{-1} = 0)."""

    level: int
    dt: float
    n: int
    mean: float
    variance: float
    cost: float

    def __post_init__(self) -> None:
        if self.n >= 2 and self.variance < 0:
            raise ModelError("variance must be >= 0")


@dataclass(frozen=True)
class RateEstimates:
    """Fitted decay/growth exponents: bias ~ dt^a, variance ~ dt^b, cost ~ dt^-g."""

    a: float
    b: float
    g: float
    bias_constant: float
    residuals: dict[str, float] = field(default_factory=dict)


def _log2_slope(levels: np.ndarray, values: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit log2(values) = intercept + slope*level; returns
    (slope, intercept, rms residual)."""
    y = np.log2(values)
    coef = np.polyfit(levels, y, 1)
    resid = y - np.polyval(coef, levels)
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2)))


def estimate_rates(screening: Sequence[LevelEstimate]) -> RateEstimates:
    """Regress weak, variance and cost rates from screening levels.

    The weak and variance rates use the level differences (l >= 1); the
    cost rate uses all levels.  Raises DegenerateFit when vanishing
    statistics leave fewer than two usable points for a fit.
    """
    levels = sorted(screening, key=lambda le: le.level)
    if len(levels) < 3:
        raise DegenerateFit("need at least 3 screening levels")
    if any(le.n < 2 for le in levels):
        raise DegenerateFit("every screening level needs at least 2 samples")

    diffs = [le for le in levels if le.level >= 1]
    mean_pts = [(le.level, abs(le.mean)) for le in diffs if abs(le.mean) > 0]
    var_pts = [(le.level, le.variance) for le in diffs if le.variance > 0]
    cost_pts = [(le.level, le.cost) for le in levels if le.cost > 0]
    if len(mean_pts) < 2:
        raise DegenerateFit("level-difference means vanish on >= 2 levels; cannot fit the weak rate")
    if len(var_pts) < 2:
        raise DegenerateFit("level-difference variances vanish on >= 2 levels; cannot fit the variance rate")
    if len(cost_pts) < 2:
        raise DegenerateFit("level costs vanish; cannot fit the cost rate")

    ls, ys = map(np.asarray, zip(*mean_pts))
    slope, intercept, res_a = _log2_slope(ls, ys)
    a = max(-slope, 0.05)
    ls, ys = map(np.asarray, zip(*var_pts))
    slope_b, _, res_b = _log2_slope(ls, ys)
    b = max(-slope_b, 0.05)
    ls, ys = map(np.asarray, zip(*cost_pts))
    slope_g, _, res_g = _log2_slope(ls, ys)
    g = max(slope_g, 0.0)

    # remaining bias at level l is the tail sum of the fitted differences:
    # K' 2^{-a(l+1)} / (1 - 2^{-a}) = (K'/(2^a - 1)) 2^{-al}
    k_prime = 2.0**intercept
    bias_constant = k_prime / (2.0**a - 1.0)
    return RateEstimates(
        a=a,
        b=b,
        g=g,
        bias_constant=bias_constant,
        residuals={"a": res_a, "b": res_b, "g": res_g},
    )


def select_max_level(a: float, bias_constant: float, eps_b: float) -> int:
    """Smallest L with estimated bias bias_constant * 2^{-aL} <= eps_b."""
    if a <= 0:
        raise ModelError("weak rate a must be > 0")
    if eps_b <= 0:
        raise ModelError("eps_b must be > 0")
    if bias_constant <= eps_b:
        return 0
    return int(math.ceil(math.log2(bias_constant / eps_b) / a - 1e-12))


def optimal_samples(
    variances: Sequence[float],
    costs: Sequence[float],
    eps_s_bar_sq: float,
    raw: bool = False,
) -> np.ndarray:
    """Cost-minimizing sample counts under the estimator-variance constraint.

    N_l = sqrt(V_l/C_l) * sum_m sqrt(V_m C_m) / eps_s_bar_sq, rounded up and
    floored at 2 unless ``raw``.
    """
    v = np.asarray(variances, dtype=np.float64)
    c = np.asarray(costs, dtype=np.float64)
    if (v < 0).any() or (c <= 0).any() or eps_s_bar_sq <= 0:
        raise ModelError("need V_l >= 0, C_l > 0 and eps_s_bar_sq > 0")
    n = np.sqrt(v / c) * np.sqrt(v * c).sum() / eps_s_bar_sq
    if raw:
        return n
    return np.maximum(np.ceil(n - 1e-9), 2).astype(np.int64)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

@dataclass
class MCResult:
    estimate: float
    n: int
    variance: float
    cost: float
    level: int | None = None


@dataclass
class MLMCResult:
    estimate: float
    levels: list[LevelEstimate]
    rates: RateEstimates
    max_level: int
    tolerances: Tolerances
    total_cost: float
    wall_seconds: float
    variance_achieved: float
    converged: bool
    iterations: int
    mc_cost_projection: float

    def report_lines(self) -> list[str]:
        t = self.tolerances
        lines = [
            f"estimate = {self.estimate:.10g}",
            f"tol = {t.tol:g}",
            f"eps_b = {t.eps_b:.6g}",
            f"eps_s = {t.eps_s:.6g}",
            f"alpha_conf = {t.confidence:g}",
            f"max_level = {self.max_level}",
            f"rate_a = {self.rates.a:.4g}",
            f"rate_b = {self.rates.b:.4g}",
            f"rate_g = {self.rates.g:.4g}",
            f"bias_constant = {self.rates.bias_constant:.6g}",
            f"variance_achieved = {self.variance_achieved:.6g}",
            f"variance_target = {t.eps_s_bar_sq:.6g}",
            f"converged = {self.converged}",
            f"iterations = {self.iterations}",
            f"total_cost_seconds = {self.total_cost:.6g}",
            f"mc_cost_projection = {self.mc_cost_projection:.6g}",
        ]
        for le in self.levels:
            lines.append(
                f"level_{le.level} = n {le.n} | dt {le.dt:g} | mean {le.mean:.6g}"
                f" | variance {le.variance:.6g} | cost {le.cost:.6g}"
            )
        return lines


@dataclass(frozen=True)
class ScreeningConfig:
    """Pilot levels for the rate regression.

    The weak and variance rates are fitted on level differences (l >= 1),
    so four screening levels give the minimal three-point slope fit with a
    residual check.
    """

    levels: tuple[int, ...] = (0, 1, 2, 3)
    samples: int = 200

    def __post_init__(self) -> None:
        if len(self.levels) < 3:
            raise ModelError("screening needs at least 3 levels")
        if self.samples < 100:
            raise ModelError("screening needs at least 100 samples per level")


class _LevelData:
    """Streaming sums for one level's differences and fine values."""

    __slots__ = ("n", "sum_d", "sum_d2", "sum_f", "sum_f2", "cost", "cost_batches")

    def __init__(self) -> None:
        self.n = 0
        self.sum_d = 0.0
        self.sum_d2 = 0.0
        self.sum_f = 0.0
        self.sum_f2 = 0.0
        self.cost = 0.0
        self.cost_batches: list[float] = []

    def add(self, fine: np.ndarray, coarse: np.ndarray, cost: float) -> None:
        d = fine - coarse
        self.n += len(d)
        self.sum_d += float(d.sum())
        self.sum_d2 += float((d * d).sum())
        self.sum_f += float(fine.sum())
        self.sum_f2 += float((fine * fine).sum())
        self.cost += cost
        if len(d):
            self.cost_batches.append(cost / len(d))

    @property
    def mean(self) -> float:
        return self.sum_d / self.n

    @property
    def variance(self) -> float:
        if self.n < 2:
            return 0.0
        m = self.mean
        return max(0.0, (self.sum_d2 - self.n * m * m) / (self.n - 1))

    @property
    def fine_variance(self) -> float:
        if self.n < 2:
            return 0.0
        m = self.sum_f / self.n
        return max(0.0, (self.sum_f2 - self.n * m * m) / (self.n - 1))

    def unit_cost(self) -> float:
        """Median-of-means smoothing of the per-sample cost."""
        if not self.cost_batches:
            return float("nan")
        return float(np.median(self.cost_batches))


def _sample_pairs_task(sampler, level: int, start: int, count: int):
    return sampler.sample_pairs(level, start, count)


def _run_pair_tasks(sampler, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [_sample_pairs_task(sampler, *t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(_sample_pairs_task, sampler, *t) for t in tasks]
        return [f.result() for f in futures]


def _chunked(start: int, count: int, chunk: int) -> list[tuple[int, int]]:
    out = []
    k = start
    while k < start + count:
        c = min(chunk, start + count - k)
        out.append((k, c))
        k += c
    return out


def mlmc_estimate(
    sampler,
    tolerances: Tolerances,
    screening: ScreeningConfig = ScreeningConfig(),
    max_level: int = 16,
    n_cap: int | None = None,
    max_refit: int = 5,
    workers: int = 1,
) -> MLMCResult:
    """Full multilevel pipeline: screening, rate fits, level selection,
    optimal allocation with iterative top-ups, telescoped estimate.

    ``sampler`` provides ``sample_pairs(level, start, count) ->
    (fine, coarse, cost)`` with coupled (q_l, q_{l-1}) pairs (the coarse
    array is zero at level 0) and ``level_dt(level)``.
    """
    wall0 = time.perf_counter()
    data: dict[int, _LevelData] = {}

    def extend(level: int, add: int) -> None:
        if add <= 0:
            return
        ld = data.setdefault(level, _LevelData())
        chunk = max(8, math.ceil(add / (4 * max(1, workers))))
        tasks = [(level, s, c) for s, c in _chunked(ld.n, add, chunk)]
        for fine, coarse, cost in _run_pair_tasks(sampler, tasks, workers):
            ld.add(np.asarray(fine), np.asarray(coarse), cost)

    def level_estimates(levels: Sequence[int]) -> list[LevelEstimate]:
        return [
            LevelEstimate(
                level=l,
                dt=sampler.level_dt(l),
                n=data[l].n,
                mean=data[l].mean,
                variance=data[l].variance,
                cost=data[l].unit_cost(),
            )
            for l in levels
        ]

    for l in screening.levels:
        extend(l, screening.samples)
    rates = estimate_rates(level_estimates(sorted(screening.levels)))
    L = select_max_level(rates.a, rates.bias_constant, tolerances.eps_b)
    L = min(L, max_level)

    def var_cost_arrays() -> tuple[np.ndarray, np.ndarray]:
        v = np.empty(L + 1)
        c = np.empty(L + 1)
        top_meas = max(l for l in data if data[l].n >= 2)
        base_v = data[top_meas].variance
        base_c = data[top_meas].unit_cost()
        for l in range(L + 1):
            if l in data and data[l].n >= 2:
                v[l] = data[l].variance
                c[l] = data[l].unit_cost()
            else:
                v[l] = base_v * 2.0 ** (-rates.b * (l - top_meas))
                c[l] = base_c * 2.0 ** (rates.g * (l - top_meas))
        return v, np.maximum(c, 1e-12)

    converged = False
    iterations = 0
    for _ in range(max_refit):
        iterations += 1
        v, c = var_cost_arrays()
        n_opt = optimal_samples(v, c, tolerances.eps_s_bar_sq)
        if n_cap is not None and (n_opt > n_cap).any():
            raise BudgetExceeded(
                f"optimal allocation {n_opt.tolist()} exceeds the per-level cap {n_cap}"
            )
        for l in range(L + 1):
            have = data[l].n if l in data else 0
            extend(l, int(n_opt[l]) - have)
        achieved = sum(data[l].variance / data[l].n for l in range(L + 1))
        if achieved <= tolerances.eps_s_bar_sq * (1 + 1e-9):
            converged = True
            break

    estimate = sum(data[l].mean for l in range(L + 1))
    total_cost = sum(data[l].cost for l in data)
    achieved = sum(data[l].variance / data[l].n for l in range(L + 1))

    # projected single-level MC cost at the same tolerance: all samples at
    # level L, variance taken from the fine values of the most-sampled level
    var_q = data[max(data, key=lambda l: data[l].n)].fine_variance
    c_single = data[L].unit_cost() * (2.0 / 3.0 if L > 0 else 1.0)
    mc_projection = math.ceil(var_q / tolerances.eps_s_bar_sq) * c_single

    return MLMCResult(
        estimate=float(estimate),
        levels=level_estimates(range(L + 1)),
        rates=rates,
        max_level=L,
        tolerances=tolerances,
        total_cost=total_cost,
        wall_seconds=time.perf_counter() - wall0,
        variance_achieved=achieved,
        converged=converged,
        iterations=iterations,
        mc_cost_projection=mc_projection,
    )


def mc_estimate(
    sample_fn: Callable[[int, int], tuple[np.ndarray, float]],
    tolerances: Tolerances,
    pilot: int = 100,
    level: int | None = None,
) -> MCResult:
    """Single-level Monte Carlo with CLT sample sizing.

    A pilot batch estimates the QoI variance; the total sample count is
    N = V z^2 / eps_s^2 (never less than the pilot, which is reused).
    """
    values, cost = sample_fn(0, pilot)
    values = np.asarray(values, dtype=np.float64)
    variance = float(values.var(ddof=1)) if len(values) > 1 else 0.0
    n_total = max(pilot, int(math.ceil(variance * tolerances.z**2 / tolerances.eps_s**2)))
    if n_total > pilot:
        more, cost2 = sample_fn(pilot, n_total - pilot)
        values = np.concatenate([values, np.asarray(more, dtype=np.float64)])
        cost += cost2
    return MCResult(
        estimate=float(values.mean()),
        n=n_total,
        variance=float(values.var(ddof=1)) if len(values) > 1 else 0.0,
        cost=cost,
        level=level,
    )


# ---------------------------------------------------------------------------
# scenario-backed sampler
# ---------------------------------------------------------------------------

_TAG_THETA = 11
_TAG_NOISE = 12


@dataclass
class ScenarioSampler:
    """Evaluates a scenario's QoI over the bucket-size level ladder.

    Deterministic scenarios couple levels through the shared parameter draw
    alone; stochastic scenarios additionally couple the process noise of
    the fine and coarse paths.  Sample k of level l is fully determined by
    (seed, l, k), so results are independent of batching and worker count.
    """

    network: SupplyChainNetwork
    initial: np.ndarray
    mode: str
    rate_policy: str
    policy: InventoryPolicy | None
    orders: OrderStream
    parameters: tuple[ParamSpec, ...]
    qoi: QoISpec
    stochastic: bool
    dt0: float
    horizon: float
    seed: int = 0

    @classmethod
    def from_scenario(cls, scenario, qoi_name: str | None = None, seed: int = 0) -> "ScenarioSampler":
        if scenario.uq is None:
            raise ModelError(f"scenario {scenario.name!r} has no uncertainty block")
        variant = scenario.uq.variant(qoi_name)
        horizon = variant.horizon if variant.horizon is not None else scenario.config.horizon
        return cls(
            network=scenario.network,
            initial=np.asarray(scenario.initial, dtype=np.float64),
            mode=scenario.config.mode,
            rate_policy=scenario.config.rate_policy,
            policy=scenario.policy,
            orders=scenario.orders,
            parameters=scenario.uq.parameters,
            qoi=variant.qoi,
            stochastic=variant.stochastic,
            dt0=variant.dt0,
            horizon=horizon,
            seed=seed,
        )

    def level_dt(self, level: int) -> float:
        return self.dt0 / 2.0**level

    def _config(self, level: int, stochastic: bool) -> SimConfig:
        return SimConfig(
            horizon=self.horizon,
            dt=self.level_dt(level),
            mode=self.mode,
            stochastic=stochastic,
            rng_seed=self.seed,
            rate_policy=self.rate_policy,
        )

    def _realize(self, level: int, k: int) -> tuple[SupplyChainNetwork, np.ndarray]:
        rng = RngStream(self.seed, (level, k, _TAG_THETA)).generator()
        theta = sample_parameters(self.parameters, rng)
        return apply_parameters(self.network, self.initial, self.parameters, theta)

    def _run_single(self, net, x0, level: int, k: int) -> float:
        if self.stochastic:
            traj = run_lleap(
                net,
                self._config(level, True),
                policy=self.policy,
                orders=self.orders,
                rng=RngStream(self.seed, (level, k, _TAG_NOISE)),
                x0=x0,
            )
        elif self.mode == "push":
            traj = run_push(net, self._config(level, False), policy=self.policy, x0=x0)
        else:
            traj = run_pull(
                net, self._config(level, False), policy=self.policy, orders=self.orders, x0=x0
            )
        return evaluate_qoi(traj, self.qoi)

    def sample_pairs(self, level: int, start: int, count: int) -> tuple[np.ndarray, np.ndarray, float]:
        """Coupled (q_l, q_{l-1}) samples for indices start..start+count-1."""
        t0 = time.perf_counter()
        fine = np.empty(count)
        coarse = np.zeros(count)
        for j in range(count):
            k = start + j
            net, x0 = self._realize(level, k)
            if level == 0:
                fine[j] = self._run_single(net, x0, 0, k)
            elif not self.stochastic:
                fine[j] = self._run_single(net, x0, level, k)
                coarse[j] = self._run_single(net, x0, level - 1, k)
            else:
                pair = CoupledPair(
                    fine=self._config(level, True),
                    coarse=self._config(level - 1, True),
                    stream=RngStream(self.seed, (level, k, _TAG_NOISE)),
                )
                tf, tc = run_coupled_pair(net, pair, policy=self.policy, orders=self.orders, x0=x0)
                fine[j] = evaluate_qoi(tf, self.qoi)
                coarse[j] = evaluate_qoi(tc, self.qoi)
        return fine, coarse, time.perf_counter() - t0

    def sample_level(self, level: int, start: int, count: int) -> tuple[np.ndarray, float]:
        """Independent single-path samples of q_l (for single-level MC)."""
        t0 = time.perf_counter()
        out = np.empty(count)
        for j in range(count):
            k = start + j
            net, x0 = self._realize(level, k)
            out[j] = self._run_single(net, x0, level, k)
        return out, time.perf_counter() - t0

    def mc_sample_fn(self, level: int, workers: int = 1):
        """Batched sampling closure for :func:`mc_estimate` at a fixed level."""

        def fn(start: int, count: int) -> tuple[np.ndarray, float]:
            chunk = max(8, math.ceil(count / (4 * max(1, workers))))
            tasks = [(level, s, c) for s, c in _chunked(start, count, chunk)]
            if workers <= 1 or len(tasks) <= 1:
                results = [self.sample_level(*t) for t in tasks]
            else:
                with ProcessPoolExecutor(max_workers=workers) as ex:
                    futures = [ex.submit(_sample_level_task, self, *t) for t in tasks]
                    results = [f.result() for f in futures]
            values = np.concatenate([r[0] for r in results])
            return values, sum(r[1] for r in results)

        return fn


def _sample_level_task(sampler, level: int, start: int, count: int):
    return sampler.sample_level(level, start, count)
