"""Stochastic time-bucket engine and coupled level pairs.

In the stochastic engine the deterministic per-bucket counts become random
variables with the same means: consumption counts are Poisson(rate*dt)
(clamped to whole batches in stock so inventories stay non-negative) and
delayed-production counts are Binomial over the elapsed fraction of a
batch's completion window.

For multilevel estimation, fine/coarse trajectory pairs sharing one
parameter draw are correlated through Poisson additivity: per coarse
bucket and process, each fine sub-bucket draws a common part (rate
min(fine, coarse)) reused by both paths plus independent residuals, so
each path keeps its exact marginal law while the pair stays tightly
coupled.  Production is coupled by giving every consumption batch
per-unit completion times driven by a uniform stream keyed by (process,
coarse bucket), shared between the paths; counting units per bucket is
distributionally identical to the sequential binomial drains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bucket_engine import (
    Trajectory,
    _capped_rate,
    _deliver,
    _simulate,
    compute_flags,
    compute_rate,
    compute_rate_shared,
    manage_inventory,
    project_demand,
    snapshot_times,
)
from .model import (
    EPS,
    InventoryPolicy,
    ModelError,
    OrderStream,
    SimConfig,
    SupplyChainNetwork,
    SystemState,
)

__all__ = [
    "RngStream",
    "CoupledPair",
    "sample_consumption",
    "sample_production",
    "run_lleap",
    "run_coupled_pair",
]

# spawn-key tags for the sub-streams of one coupled pair
_TAG_DRIVER = 0
_TAG_UNITS = 3
_TAG_PASS2 = 4


def _poisson_from_uniform(u: float, mean: float) -> int:
    """Exact Poisson draw by CDF inversion of a shared uniform.

    Keeps fine and coarse paths comonotone where their means differ (the
    additive common-part split needs both rates up front, which the
    sequential second pass cannot provide).
    """
    if mean <= 0.0:
        return 0
    p = math.exp(-mean)
    cdf = p
    k = 0
    while u > cdf and k < 10_000_000:
        k += 1
        p *= mean / k
        cdf += p
    return k


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream addressed by (seed, stream key).

    Identical (seed, stream) always yields the identical draw sequence;
    children derived with :meth:`child` are statistically independent.
    """

    seed: int
    stream: tuple[int, ...] = ()

    def child(self, *key: int) -> "RngStream":
        return RngStream(self.seed, self.stream + tuple(int(k) for k in key))

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=self.stream)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))


@dataclass(frozen=True)
class CoupledPair:
    """Configuration of one fine/coarse trajectory pair for a level difference.

    The coarse bucket is exactly twice the fine bucket; both runs share one
    horizon, mode, and random stream.  The coupling preserves each path's
    marginal law, so the fine output is distributed like an independent
    fine run.
    """

    fine: SimConfig
    coarse: SimConfig
    stream: RngStream

    def __post_init__(self) -> None:
        if abs(self.coarse.dt - 2.0 * self.fine.dt) > 1e-12 * max(1.0, self.coarse.dt):
            raise ModelError(
                f"coupled pair needs coarse dt == 2 * fine dt, got {self.coarse.dt} vs {self.fine.dt}"
            )
        if self.fine.horizon != self.coarse.horizon:
            raise ModelError("coupled pair needs matching horizons")
        if self.fine.mode != self.coarse.mode:
            raise ModelError("coupled pair needs matching modes")
        if not (self.fine.stochastic and self.coarse.stochastic):
            raise ModelError("coupled pairs are for stochastic runs")


def sample_consumption(rate: float, dt: float, rng: np.random.Generator) -> int:
    """Number of process firings in one bucket: Poisson with mean rate*dt."""
    if rate < 0:
        raise ModelError("rate must be >= 0")
    mean = rate * dt
    if mean <= 0.0:
        return 0
    return int(rng.poisson(mean))


def sample_production(quantity: int, fraction: float, rng: np.random.Generator) -> int:
    """Completions out of a batch of `quantity` over an elapsed window fraction."""
    if not 0.0 <= fraction <= 1.0:
        raise ModelError("fraction must lie in [0, 1]")
    if quantity < 0 or int(quantity) != quantity:
        raise ModelError("quantity must be a non-negative integer")
    if quantity == 0:
        return 0
    return int(rng.binomial(int(quantity), fraction))


def run_lleap(
    net: SupplyChainNetwork,
    config: SimConfig,
    policy: InventoryPolicy | None = None,
    orders: OrderStream | None = None,
    rng: np.random.Generator | RngStream | None = None,
    x0: np.ndarray | None = None,
) -> Trajectory:
    """Stochastic bucket run: push or pull control flow with random counts.

    Part counts are integers throughout, so initial inventories are rounded
    to the nearest unit.  Passing no ``rng`` derives one from the config
    seed; identical seeds give bit-identical trajectories.
    """
    if not config.stochastic:
        raise ModelError("run_lleap requires config.stochastic, got a deterministic config")
    if isinstance(rng, RngStream):
        rng = rng.generator()
    if rng is None:
        rng = RngStream(config.rng_seed).generator()
    x0_int = None if x0 is None else np.rint(np.asarray(x0, dtype=np.float64))
    orders = orders if config.mode == "pull" else None
    return _simulate(net, config, policy, orders or OrderStream(), x0_int, rng)


# ---------------------------------------------------------------------------
# coupled fine/coarse pair
# ---------------------------------------------------------------------------

class _CoupledPath:
    """One path of a coupled pair.

    Runs the bucket machinery (orders, refills, demand projection, flags,
    deliveries) on its own grid, but first-pass consumption counts are
    injected by the pair driver and production materializes from per-unit
    completion times binned onto the grid at batch creation.
    """

    def __init__(
        self,
        net: SupplyChainNetwork,
        config: SimConfig,
        policy: InventoryPolicy | None,
        orders: OrderStream | None,
        x0: np.ndarray | None,
        shared_root: RngStream,
    ):
        self.net = net
        self.config = config
        self.policy = policy
        self.rate_fn = compute_rate_shared if config.rate_policy == "shared" else compute_rate
        self.times = snapshot_times(config.horizon, config.dt)
        self.buckets = len(self.times) - 1
        part_count = net.part_count
        x_init = np.zeros(part_count) if x0 is None else np.rint(np.asarray(x0, dtype=np.float64))
        self.state = SystemState.initial(x_init, config.sentinel)
        self.states = np.empty((self.buckets + 1, part_count))
        self.states[0] = self.state.x
        self.delivered = np.zeros((self.buckets + 1, part_count))
        self.arrivals = np.zeros((self.buckets, part_count))
        self.shared_root = shared_root
        # per-process unit streams: unit u of process i uses the u-th draw of
        # stream (i) on both paths, so completion-time coupling survives the
        # paths batching their units differently
        self._unit_gens: dict[int, np.random.Generator] = {}
        self._pass2_gens: dict[tuple[int, int], np.random.Generator] = {}

        self.pull = config.mode == "pull"
        self.events = orders.events if (self.pull and orders is not None) else ()
        self.priority = orders.policy == "final-product-priority" if orders is not None else True
        self.final_parts = net.final_parts
        self.has_spare = any(e.part not in self.final_parts for e in self.events)
        self.ordered_parts = sorted({e.part for e in self.events})
        self.ghat_final = [0.0] * part_count
        self.g_fin: list[float] = [0.0] * part_count
        self.g_all: list[float] = [0.0] * part_count
        self.g_dirty = False
        self.next_event = 0
        if self.pull:
            net.demand_order  # fail fast on cycles
        self.k = 0
        self.rates1 = np.zeros(net.n_processes)

    # -- bucket phases ------------------------------------------------------

    @property
    def t(self) -> float:
        return float(self.times[self.k])

    @property
    def t_end(self) -> float:
        return float(self.times[self.k + 1])

    def begin_bucket(self) -> np.ndarray:
        """Orders, refills, flags; returns the frozen first-pass rate vector."""
        state, net = self.state, self.net
        t, t_end, dt = self.t, self.t_end, self.t_end - self.t
        if self.pull:
            while self.next_event < len(self.events) and self.events[self.next_event].time < t_end - EPS:
                ev = self.events[self.next_event]
                state.g_hat[ev.part] += ev.quantity
                if ev.part in self.final_parts:
                    self.ghat_final[ev.part] += ev.quantity
                self.g_dirty = True
                self.next_event += 1
        if self.policy is not None:
            manage_inventory(state, self.policy, t, self.config.sentinel)
        self.rates1[:] = 0.0
        if not self.pull:
            for i in range(net.n_processes):
                self.rates1[i] = self.rate_fn(net, state, i, dt)
        else:
            if self.g_dirty:
                self.g_fin = project_demand(net, self.ghat_final)
                self.g_all = project_demand(net, state.g_hat) if self.has_spare else self.g_fin
                self.g_dirty = False
            flags = compute_flags(net, self.g_fin, self.ghat_final, state.c)
            for i in np.flatnonzero(flags):
                self.rates1[i] = self.rate_fn(net, state, i, dt)
        return self.rates1

    def _unit_gen(self, i: int) -> np.random.Generator:
        gen = self._unit_gens.get(i)
        if gen is None:
            gen = self.shared_root.child(_TAG_UNITS, i).generator()
            self._unit_gens[i] = gen
        return gen

    def _pass2_uniform(self, i: int, coarse_bucket: int) -> float:
        key = (i, coarse_bucket)
        gen = self._pass2_gens.get(key)
        if gen is None:
            gen = self.shared_root.child(_TAG_PASS2, i, coarse_bucket).generator()
            self._pass2_gens[key] = gen
        return float(gen.random())

    def apply_consumption(self, i: int, delta: int) -> int:
        """Consume inputs for `delta` firings (clamped to stock) and schedule
        the batch's unit completion times onto the arrival grid."""
        net, state = self.net, self.state
        cons = net.cons_list[i]
        x = state.x
        cap = math.inf
        for p, w in cons:
            r = math.floor(x[p] / w + EPS)
            if r < cap:
                cap = r
        delta = int(min(delta, cap))
        if delta <= 0:
            return 0
        for p, w in cons:
            taken = w * delta
            x[p] -= taken
            if x[p] < 0.0:
                x[p] = 0.0
            state.c[p] += taken
        t, dt = self.t, self.t_end - self.t
        earliest = t + net.lead_min_list[i]
        span = dt + net.lead_max_list[i] - net.lead_min_list[i]
        u = self._unit_gen(i).random(delta)
        tau = earliest + u * span
        bins = np.searchsorted(self.times, tau, side="right") - 1
        bins = bins[bins < self.buckets]  # completions beyond the horizon are lost
        for part, beta in net.prod_list[i]:
            np.add.at(self.arrivals[:, part], bins, beta)
        return delta

    def second_pass(self, coarse_bucket: int) -> None:
        """Spare-part demand pass with leftover capacity.

        Counts come from shared-uniform Poisson inversion keyed by
        (process, coarse bucket), so the paths make comonotone draws even
        though their second-pass rates are only known mid-bucket.
        """
        if not (self.pull and self.has_spare):
            return
        net, state = self.net, self.state
        dt = self.t_end - self.t
        flags = compute_flags(net, self.g_all, state.g_hat, state.c)
        for i in np.flatnonzero(flags):
            budget = net.capacity_list[i] - self.rates1[i]
            if budget <= EPS:
                continue
            r = _capped_rate(state.x, net.cons_list[i], budget, dt)
            mean = r * dt
            if mean <= 0.0:
                continue
            delta = _poisson_from_uniform(self._pass2_uniform(i, coarse_bucket), mean)
            if delta > 0:
                self.apply_consumption(i, delta)

    def finish_bucket(self) -> None:
        state = self.state
        x = state.x
        for p, arrived in enumerate(self.arrivals[self.k].tolist()):
            if arrived:
                x[p] += arrived
        if self.pull and self.ordered_parts:
            _deliver(self.net, state, self.ordered_parts, self.final_parts, self.g_fin, self.priority)
        state.t = self.t_end
        self.states[self.k + 1] = state.x
        if self.pull:
            self.delivered[self.k + 1] = state.delivered
        self.k += 1

    def trajectory(self) -> Trajectory:
        return Trajectory(self.times, self.states, self.delivered, self.config.mode, self.config.dt)


def run_coupled_pair(
    net: SupplyChainNetwork,
    pair: CoupledPair,
    policy: InventoryPolicy | None = None,
    orders: OrderStream | None = None,
    x0: np.ndarray | None = None,
) -> tuple[Trajectory, Trajectory]:
    """Simulate one correlated (fine, coarse) pair; returns both trajectories.

    Per coarse bucket and process, with fine-rate lam_f in each sub-bucket
    and the frozen coarse rate lam_c: the common count is Poisson of
    min(lam_f, lam_c) over the sub-bucket and is shared by both paths; each
    path adds its independent Poisson residual, so fine totals are
    Poisson(lam_f dt_f) and the coarse total is Poisson(lam_c dt_c) exactly.
    """
    stream = pair.stream
    driver = stream.child(_TAG_DRIVER).generator()
    fine = _CoupledPath(net, pair.fine, policy, orders, x0, stream)
    coarse = _CoupledPath(net, pair.coarse, policy, orders, x0, stream)
    n = net.n_processes
    # fine sub-buckets belonging to each coarse bucket (the shortened final
    # buckets can leave a lone sub-bucket at the tail)
    fine_edges = np.searchsorted(fine.times, coarse.times[1:] - EPS, side="right")

    start = 0
    cres_total = np.zeros(n)
    for kc in range(coarse.buckets):
        lam_c = coarse.begin_bucket().copy()
        cres_total[:] = 0.0
        stop = int(fine_edges[kc])
        for _kf in range(start, stop):
            lam_f = fine.begin_bucket()
            dt_f = fine.t_end - fine.t
            for i in range(n):
                lf = lam_f[i]
                lc = lam_c[i]
                if lf <= 0.0 and lc <= 0.0:
                    continue
                m = lf if lf < lc else lc
                common = int(driver.poisson(m * dt_f)) if m > 0.0 else 0
                fres = int(driver.poisson((lf - m) * dt_f)) if lf > m else 0
                cres = int(driver.poisson((lc - m) * dt_f)) if lc > m else 0
                if common + fres > 0:
                    fine.apply_consumption(i, common + fres)
                cres_total[i] += common + cres
            fine.second_pass(kc)
            fine.finish_bucket()
        start = stop
        for i in range(n):
            if cres_total[i] > 0:
                coarse.apply_consumption(i, int(cres_total[i]))
        coarse.second_pass(kc)
        coarse.finish_bucket()
    return fine.trajectory(), coarse.trajectory()
