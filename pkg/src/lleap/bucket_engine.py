"""Deterministic time-bucket simulation engine.

The simulated horizon [0, T] is cut into buckets of nominal width dt (the
final bucket is shortened so the run ends exactly at T).  Within a bucket
[t, t+dt) events are aggregated and applied at the boundary:

* consumption: each process fires at a capped rate, consuming its input
  parts instantly and enqueueing the batch on the delay queue with its
  earliest completion time ``t + lead_min`` and completion span
  ``dt + lead_max - lead_min``;
* production: every queued batch whose completion window overlaps the
  bucket drains proportionally to the elapsed fraction of its span;
* pull mode additionally refills raw-part inventories, projects
  accumulated order demand backwards through the network, gates
  consumption with per-process flags, and withdraws finished parts
  against outstanding orders.

The same bucket loop is reused by the stochastic engine (consumption and
production counts become Poisson/binomial draws) by passing an ``rng``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    EPS,
    CyclicNetwork,
    DelayQueue,
    InventoryPolicy,
    ModelError,
    OrderStream,
    SimConfig,
    SupplyChainNetwork,
    SystemState,
)

__all__ = [
    "Trajectory",
    "compute_rate",
    "compute_rate_shared",
    "consume",
    "produce",
    "manage_inventory",
    "project_demand",
    "compute_flags",
    "run_push",
    "run_pull",
    "snapshot_times",
]

# below this many live queue entries a scalar drain loop beats the
# vectorized one (numpy dispatch overhead dominates on small arrays)
_SCALAR_QUEUE_LIMIT = 96


@dataclass
class Trajectory:
    """Time-stamped state history of one simulation run.

    ``states[k]`` is the part-count vector at ``times[k]`` (``times[0] = 0``
    holds the initial state, ``times[-1] = T`` exactly).  ``delivered``
    accumulates per-part order withdrawals; in push mode it stays zero and
    final-product counts are read from ``states`` directly.
    """

    times: np.ndarray
    states: np.ndarray
    delivered: np.ndarray
    mode: str
    dt: float
    qoi_cache: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (np.diff(self.times) <= 0).any():
            raise ModelError("snapshot times must be strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def part_series(self, part: int) -> np.ndarray:
        return self.states[:, part]

    def delivered_series(self, part: int) -> np.ndarray:
        """Cumulative fulfilment counter used by the delivery QoIs.

        Pull runs withdraw delivered parts from stock, so the dedicated
        counter is used; in push runs nothing consumes a final product and
        its stock level is the cumulative production.
        """
        if self.mode == "pull":
            return self.delivered[:, part]
        return self.states[:, part]


def snapshot_times(horizon: float, dt: float) -> np.ndarray:
    """Bucket boundaries 0, dt, 2*dt, ..., horizon (last bucket shortened)."""
    n_full = int(math.floor(horizon / dt + EPS))
    times = dt * np.arange(n_full + 1, dtype=np.float64)
    if horizon - times[-1] > EPS:
        times = np.append(times, horizon)
    else:
        times[-1] = horizon
    return times


# ---------------------------------------------------------------------------
# per-bucket kernels
# ---------------------------------------------------------------------------

def _capped_rate(x, cons: list[tuple[int, float]], lam: float, dt: float) -> float:
    """Largest admissible rate <= lam: full lam if stock covers lam*dt,
    otherwise the whole-batches-in-stock rate (floor keeps unit granularity)."""
    if lam <= 0.0:
        return 0.0
    draw = lam * dt
    for p, w in cons:
        if x[p] - w * draw < -EPS:
            break
    else:
        return lam
    m = math.inf
    for p, w in cons:
        r = math.floor(x[p] / w + EPS)
        if r < m:
            m = r
    return m / dt


def compute_rate(net: SupplyChainNetwork, state: SystemState, i: int, dt: float) -> float:
    """Production rate of process i over a bucket of width dt.

    Returns capacity when every consumed part can sustain it for the whole
    bucket, else the starved rate floor(stock/weight)/dt, which can never
    drive an input part negative.
    """
    return _capped_rate(state.x, net.cons_list[i], net.capacity_list[i], dt)


def compute_rate_shared(net: SupplyChainNetwork, state: SystemState, i: int, dt: float) -> float:
    """Fair-split variant: inputs shared by several processes are divided evenly.

    The abundance test subtracts the maximal draw of *all* competing
    processes; the starved branch divides stock by the number of competing
    processes before flooring.
    """
    lam = net.capacity_list[i]
    if lam <= 0.0:
        return 0.0
    x = state.x
    shared = net.shared_draw
    for p, _w in net.cons_list[i]:
        if x[p] - shared[p] * dt < -EPS:
            break
    else:
        return lam
    counts = net.n_consumers
    m = math.inf
    for p, w in net.cons_list[i]:
        r = math.floor(x[p] / (counts[p] * w) + EPS)
        if r < m:
            m = r
    return m / dt


def _stock_cap(x, cons: list[tuple[int, float]]) -> float:
    """Whole batches the current stock can support."""
    m = math.inf
    for p, w in cons:
        r = math.floor(x[p] / w + EPS)
        if r < m:
            m = r
    return m


def consume(
    net: SupplyChainNetwork,
    state: SystemState,
    queue: DelayQueue,
    i: int,
    t: float,
    dt: float,
    rate: float,
    rng: np.random.Generator | None = None,
) -> float:
    """Fire process i for one bucket: remove inputs, enqueue the delayed batch.

    Deterministic count is rate*dt; stochastic count is Poisson(rate*dt)
    clamped to whole batches in stock so inventories stay non-negative.
    Returns the batch size; zero-size batches leave no queue entry.
    """
    x = state.x
    c = state.c
    cons = net.cons_list[i]
    if rng is None:
        delta = rate * dt
    else:
        mean = rate * dt
        if mean <= 0.0:
            return 0.0
        delta = float(rng.poisson(mean))
        if delta > 0.0:
            cap = _stock_cap(x, cons)
            if delta > cap:
                delta = cap
    if delta <= 0.0:
        return 0.0
    for p, w in cons:
        taken = w * delta
        nx = x[p] - taken
        if nx < -1e-6:
            raise RuntimeError(f"process {i + 1} overdrew part {p + 1}: {nx}")
        x[p] = nx if nx > 0.0 else 0.0
        c[p] += taken
    queue.append(i, delta, t + net.lead_min_list[i], dt + net.lead_max_list[i] - net.lead_min_list[i])
    return delta


def produce(
    net: SupplyChainNetwork,
    state: SystemState,
    queue: DelayQueue,
    t: float,
    dt: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Drain queued batches whose completion window overlaps [t, t+dt).

    Each due batch completes the elapsed fraction of its remaining span
    (deterministic) or a Binomial(quantity, fraction) draw (stochastic),
    adds the weighted outputs to stock, and has its window advanced to the
    bucket end.  Returns total completions per process.
    """
    t_end = t + dt
    totals = np.zeros(net.n_processes)
    n = queue.size
    if n == 0:
        return totals
    x = state.x
    prod = net.prod_list
    if n <= _SCALAR_QUEUE_LIMIT:
        pid_a, qty_a = queue.pid, queue.qty
        ts_a, span_a = queue.earliest, queue.span
        write = 0
        for k in range(n):
            q = qty_a[k]
            span = span_a[k]
            ts = ts_a[k]
            if span > EPS and q > 0.0 and ts < t_end - EPS:
                elapsed = t_end - ts
                frac = elapsed / span
                if frac >= 1.0:
                    dp = q
                    q = 0.0
                    span = 0.0
                else:
                    dp = q * frac if rng is None else float(rng.binomial(int(q + 0.5), frac))
                    q -= dp
                    span -= elapsed
                ts = t_end
                if dp > 0.0:
                    i = pid_a[k]
                    totals[i] += dp
                    for p, w in prod[i]:
                        x[p] += w * dp
            if q > EPS and span > EPS:  # keep live entries, compacting in place
                pid_a[write] = pid_a[k]
                qty_a[write] = q
                ts_a[write] = ts
                span_a[write] = span
                write += 1
        queue.size = write
        return totals
    # vectorized drain for long queues (fine buckets with long lead times)
    qty = queue.qty[:n]
    earliest = queue.earliest[:n]
    span = queue.span[:n]
    due = (span > EPS) & (earliest < t_end - EPS) & (qty > 0)
    if due.any():
        idx = np.flatnonzero(due)
        elapsed = t_end - earliest[idx]
        frac = np.minimum(elapsed / span[idx], 1.0)
        if rng is None:
            dp = qty[idx] * frac
        else:
            dp = rng.binomial(np.rint(qty[idx]).astype(np.int64), frac).astype(np.float64)
        np.add.at(totals, queue.pid[:n][idx], dp)
        for i in np.flatnonzero(totals):
            tot = float(totals[i])
            for p, w in prod[i]:
                x[p] += w * tot
        qty[idx] -= dp
        span[idx] = np.maximum(0.0, span[idx] - elapsed)
        earliest[idx] = t_end
        queue.compact()
    return totals


def manage_inventory(
    state: SystemState, policy: InventoryPolicy, t: float, sentinel: float
) -> None:
    """Raw-part refilling: deliver a due back order, or schedule a new one.

    The delivered amount is the back-order quantity computed at arrival
    time; with no order pending (next refill at the sentinel) and stock at
    or below the safety level, an order is scheduled ``delivery_delay``
    days out.
    """
    for part, rule in policy.items():
        xb = rule.back_order(state.x[part])
        tbar = state.next_refill[part]
        if t >= tbar - EPS:
            state.x[part] += xb
            state.next_refill[part] = sentinel
        elif tbar >= sentinel - EPS and xb > 0:
            state.next_refill[part] = t + rule.delivery_delay


def project_demand(net: SupplyChainNetwork, g_hat) -> list[float]:
    """Projected accumulated demand per part.

    Final products carry their direct orders; every other part adds, for
    each process consuming it, the input needed to cover the largest
    whole-batch demand among that process's outputs.  Evaluated in an order
    that guarantees every output's projection precedes its inputs, which
    exists iff the network is acyclic.
    """
    order = net.demand_order  # raises CyclicNetwork on cyclic networks
    g = [0.0] * net.part_count
    final = net.final_parts
    prod = net.prod_list
    for p in order:
        if p in final:
            g[p] = float(g_hat[p])
            continue
        total = float(g_hat[p])
        for i, alpha in net.consumers_w[p]:
            batches = 0.0
            for q, beta in prod[i]:
                b = math.ceil(g[q] / beta - EPS)
                if b > batches:
                    batches = b
            total += alpha * batches
        g[p] = total
    return g


def compute_flags(net: SupplyChainNetwork, g, g_hat, c) -> np.ndarray:
    """Boolean per process: keep producing while any consumed part is
    under-consumed relative to its projected demand net of direct orders."""
    flags = np.zeros(net.n_processes, dtype=bool)
    consumers = net.consumers
    for p in range(net.part_count):
        if c[p] < g[p] - g_hat[p] - EPS:
            for i in consumers[p]:
                flags[i] = True
    return flags


# ---------------------------------------------------------------------------
# outer loops
# ---------------------------------------------------------------------------

def _deliver(
    net: SupplyChainNetwork,
    state: SystemState,
    ordered_parts: list[int],
    final_parts: frozenset[int],
    g_fin,
    priority: bool,
) -> None:
    """Withdraw stock against outstanding orders at the bucket boundary.

    Spare-part withdrawals leave enough stock to cover the remaining
    consumption still needed for final-product production when the
    final-product-priority policy is active.
    """
    x = state.x
    delivered = state.delivered
    for p in ordered_parts:
        outstanding = state.g_hat[p] - delivered[p]
        if outstanding <= EPS:
            continue
        if p in final_parts:
            w = x[p] if x[p] < outstanding else outstanding
        else:
            avail = x[p]
            if priority:
                reserve = g_fin[p] - state.c[p]
                if reserve > 0.0:
                    avail -= reserve
            if avail <= 0.0:
                continue
            w = avail if avail < outstanding else outstanding
        if w > EPS:
            x[p] -= w
            delivered[p] += w


def _simulate(
    net: SupplyChainNetwork,
    config: SimConfig,
    policy: InventoryPolicy | None,
    orders: OrderStream | None,
    x0,
    rng: np.random.Generator | None,
) -> Trajectory:
    part_count = net.part_count
    n = net.n_processes
    times = snapshot_times(config.horizon, config.dt)
    times_l = times.tolist()
    buckets = len(times) - 1
    state = SystemState.initial(
        [0.0] * part_count if x0 is None else x0, config.sentinel
    )
    queue = DelayQueue()
    states = np.empty((buckets + 1, part_count))
    delivered = np.zeros((buckets + 1, part_count))
    states[0] = state.x

    pull = config.mode == "pull"
    rate_fn = compute_rate_shared if config.rate_policy == "shared" else compute_rate
    if pull:
        net.demand_order  # fail fast on cyclic networks
        events = orders.events if orders is not None else ()
        priority = orders.policy == "final-product-priority" if orders is not None else True
        final_parts = net.final_parts
        has_spare = any(e.part not in final_parts for e in events)
        ordered_parts = sorted({e.part for e in events})
        ghat_final = [0.0] * part_count
        g_fin: list[float] = [0.0] * part_count
        g_all: list[float] = [0.0] * part_count
        g_dirty = False
        next_event = 0
        n_events = len(events)
    rates1 = [0.0] * n
    process_range = range(n)

    for k in range(buckets):
        t = times_l[k]
        t_end = times_l[k + 1]
        dt = t_end - t
        if pull:
            # orders landing inside this bucket act from its start
            while next_event < n_events and events[next_event].time < t_end - EPS:
                ev = events[next_event]
                state.g_hat[ev.part] += ev.quantity
                if ev.part in final_parts:
                    ghat_final[ev.part] += ev.quantity
                g_dirty = True
                next_event += 1
        if policy is not None:
            manage_inventory(state, policy, t, config.sentinel)
        if not pull:
            for i in process_range:
                r = rate_fn(net, state, i, dt)
                if r > 0.0:
                    consume(net, state, queue, i, t, dt, r, rng)
        else:
            if g_dirty:
                g_fin = project_demand(net, ghat_final)
                g_all = project_demand(net, state.g_hat) if has_spare else g_fin
                g_dirty = False
            flags = compute_flags(net, g_fin, ghat_final, state.c)
            for i in process_range:
                rates1[i] = 0.0
                if flags[i]:
                    r = rate_fn(net, state, i, dt)
                    if r > 0.0:
                        rates1[i] = r
                        consume(net, state, queue, i, t, dt, r, rng)
            if has_spare:
                # second pass picks up spare-part demand with leftover capacity
                flags2 = compute_flags(net, g_all, state.g_hat, state.c)
                for i in process_range:
                    if flags2[i]:
                        budget = net.capacity_list[i] - rates1[i]
                        if budget <= EPS:
                            continue
                        r = _capped_rate(state.x, net.cons_list[i], budget, dt)
                        if r > 0.0:
                            consume(net, state, queue, i, t, dt, r, rng)
        if queue.size:
            produce(net, state, queue, t, dt, rng)
        if pull and ordered_parts:
            _deliver(net, state, ordered_parts, final_parts, g_fin, priority)
        state.t = t_end
        states[k + 1] = state.x
        if pull:
            delivered[k + 1] = state.delivered
    return Trajectory(times, states, delivered, config.mode, config.dt)


def run_push(
    net: SupplyChainNetwork,
    config: SimConfig,
    policy: InventoryPolicy | None = None,
    x0=None,
) -> Trajectory:
    """Forecast-driven simulation: every process runs at its capped rate."""
    if config.mode != "push":
        raise ModelError("run_push requires config.mode == 'push'")
    if config.stochastic:
        raise ModelError("run_push is deterministic; use the stochastic engine")
    return _simulate(net, config, policy, None, x0, None)


def run_pull(
    net: SupplyChainNetwork,
    config: SimConfig,
    policy: InventoryPolicy | None = None,
    orders: OrderStream | None = None,
    x0=None,
) -> Trajectory:
    """Order-driven simulation: consumption gated by projected demand flags."""
    if config.mode != "pull":
        raise ModelError("run_pull requires config.mode == 'pull'")
    if config.stochastic:
        raise ModelError("run_pull is deterministic; use the stochastic engine")
    if net.cycle is not None:
        raise CyclicNetwork("pull mode requires an acyclic network")
    return _simulate(net, config, policy, orders or OrderStream(), x0, None)
