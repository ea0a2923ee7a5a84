"""Core data model for time-bucket supply-chain simulation.

A supply chain is a set of processes, each consuming weighted amounts of
some parts and producing weighted amounts of others after a lead-time
delay.  Parts that are consumed but never produced are raw materials;
parts that are produced but never consumed are final products.  The model
types here are plain containers plus structural validation; all dynamics
live in the engine modules.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "PartId",
    "ProcessSpec",
    "SupplyChainNetwork",
    "ValidationReport",
    "SystemState",
    "DelayQueue",
    "QueueEntry",
    "RefillRule",
    "InventoryPolicy",
    "OrderEvent",
    "OrderStream",
    "SimConfig",
    "ModelError",
    "EmptyProcessList",
    "CyclicNetwork",
    "validate_network",
    "classify_parts",
    "part_name",
    "EPS",
]

# Comparison epsilon for bucket arithmetic, in days.
EPS = 1e-9

# Parts are integer indices 0..part_count-1; the index <-> part mapping is
# bijective by construction.  `part_name` renders the 1-based display name.
PartId = int


def part_name(part: PartId) -> str:
    return f"P{part + 1}"


class ModelError(ValueError):
    """Base class for structural model errors."""


class EmptyProcessList(ModelError):
    """Network has no processes."""


class CyclicNetwork(ModelError):
    """Part/process graph has a cycle; demand projection would not terminate."""


@dataclass(frozen=True)
class ProcessSpec:
    """One production (or transport) process.

    ``consumed`` and ``produced`` are sequences of ``(part, weight)`` with
    positive integer weights: one firing consumes ``weight`` units of each
    consumed part and, after a delay between ``lead_min`` and ``lead_max``
    days, yields ``weight`` units of each produced part.  ``capacity`` is
    the maximum firing rate in firings per day.
    """

    id: int
    consumed: tuple[tuple[PartId, int], ...]
    produced: tuple[tuple[PartId, int], ...]
    capacity: float
    lead_min: float
    lead_max: float

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ModelError(f"process id must be >= 1, got {self.id}")
        if not self.consumed or not self.produced:
            raise ModelError(f"process {self.id}: consumed and produced must be non-empty")
        for label, pairs in (("consumed", self.consumed), ("produced", self.produced)):
            parts = [p for p, _ in pairs]
            if len(parts) != len(set(parts)):
                raise ModelError(f"process {self.id}: duplicate part in {label}")
            for p, w in pairs:
                if p < 0:
                    raise ModelError(f"process {self.id}: negative part index {p}")
                if int(w) != w or w <= 0:
                    raise ModelError(f"process {self.id}: weight for {part_name(p)} must be a positive integer")
        if self.capacity < 0:
            raise ModelError(f"process {self.id}: capacity must be >= 0")
        if not (0 <= self.lead_min <= self.lead_max):
            raise ModelError(f"process {self.id}: need 0 <= lead_min <= lead_max")


@dataclass(frozen=True)
class ValidationReport:
    raw: frozenset[PartId]
    final: frozenset[PartId]
    cycle: tuple[PartId, ...] | None
    unreferenced: frozenset[PartId]

    @property
    def ok(self) -> bool:
        return self.cycle is None and not self.unreferenced


class SupplyChainNetwork:
    """Static description of the supply chain: processes over a fixed part set.

    Engine-facing views (per-process index/weight arrays, consumer maps,
    demand-propagation order) are precomputed once here so simulation loops
    stay allocation-free.
    """

    def __init__(self, processes: Sequence[ProcessSpec], part_count: int):
        if not processes:
            raise EmptyProcessList("network must contain at least one process")
        self.processes: tuple[ProcessSpec, ...] = tuple(processes)
        self.part_count = int(part_count)
        ids = [p.id for p in self.processes]
        if ids != list(range(1, len(ids) + 1)):
            raise ModelError("process ids must be 1..n in order")
        for proc in self.processes:
            for p, _ in proc.consumed + proc.produced:
                if p >= self.part_count:
                    raise ModelError(
                        f"process {proc.id} references {part_name(p)} beyond part_count={part_count}"
                    )

        n = len(self.processes)
        self.n_processes = n
        # Engine views: ragged per-process arrays, plus plain-Python copies
        # (scalar loops over 1-3 parts beat numpy dispatch in the hot loop).
        self.cons_parts = [np.array([p for p, _ in pr.consumed], dtype=np.intp) for pr in self.processes]
        self.cons_weights = [np.array([w for _, w in pr.consumed], dtype=np.float64) for pr in self.processes]
        self.prod_parts = [np.array([p for p, _ in pr.produced], dtype=np.intp) for pr in self.processes]
        self.prod_weights = [np.array([w for _, w in pr.produced], dtype=np.float64) for pr in self.processes]
        self.cons_list = [[(p, float(w)) for p, w in pr.consumed] for pr in self.processes]
        self.prod_list = [[(p, float(w)) for p, w in pr.produced] for pr in self.processes]
        self.capacity = np.array([pr.capacity for pr in self.processes], dtype=np.float64)
        self.lead_min = np.array([pr.lead_min for pr in self.processes], dtype=np.float64)
        self.lead_max = np.array([pr.lead_max for pr in self.processes], dtype=np.float64)
        self.capacity_list = [float(pr.capacity) for pr in self.processes]
        self.lead_min_list = [float(pr.lead_min) for pr in self.processes]
        self.lead_max_list = [float(pr.lead_max) for pr in self.processes]

        consumed_any = {p for pr in self.processes for p, _ in pr.consumed}
        produced_any = {p for pr in self.processes for p, _ in pr.produced}
        self.raw_parts = frozenset(consumed_any - produced_any)
        self.final_parts = frozenset(produced_any - consumed_any)
        self.unreferenced = frozenset(range(self.part_count)) - consumed_any - produced_any

        # consumers[p] = process indices (0-based) consuming part p;
        # consumers_w keeps the weight alongside; shared_draw[p] is the
        # combined maximal per-day draw of all consumers (fair-split rule).
        self.consumers: list[list[int]] = [[] for _ in range(self.part_count)]
        self.consumers_w: list[list[tuple[int, float]]] = [[] for _ in range(self.part_count)]
        self.shared_draw = np.zeros(self.part_count)
        for i, pr in enumerate(self.processes):
            for p, w in pr.consumed:
                self.consumers[p].append(i)
                self.consumers_w[p].append((i, float(w)))
                self.shared_draw[p] += w * pr.capacity
        self.n_consumers = np.maximum(
            np.array([len(c) for c in self.consumers], dtype=np.float64), 1.0
        )

        self._cycle = self._find_cycle()
        self._demand_order = None if self._cycle else self._demand_sweep_order()

    # -- structure ---------------------------------------------------------

    def _find_cycle(self) -> tuple[PartId, ...] | None:
        """Return one part cycle of the consumed->produced graph, if any."""
        succ: list[set[int]] = [set() for _ in range(self.part_count)]
        for pr in self.processes:
            for p, _ in pr.consumed:
                succ[p].update(q for q, _ in pr.produced)
        color = [0] * self.part_count  # 0 white, 1 on stack, 2 done
        stack: list[PartId] = []

        def visit(u: int) -> tuple[PartId, ...] | None:
            color[u] = 1
            stack.append(u)
            for v in succ[u]:
                if color[v] == 1:
                    return tuple(stack[stack.index(v):] + [v])
                if color[v] == 0:
                    found = visit(v)
                    if found:
                        return found
            color[u] = 2
            stack.pop()
            return None

        for u in range(self.part_count):
            if color[u] == 0:
                found = visit(u)
                if found:
                    return found
        return None

    def _demand_sweep_order(self) -> list[PartId]:
        """Parts ordered so every produced part of every consumer of p precedes p.

        Demand propagates from final products back to raw materials; the
        projection recursion is evaluated in this order.
        """
        # edge q -> p whenever a process consumes p and produces q
        succ: list[set[int]] = [set() for _ in range(self.part_count)]
        indeg = [0] * self.part_count
        for pr in self.processes:
            for p, _ in pr.consumed:
                for q, _ in pr.produced:
                    if p not in succ[q]:
                        succ[q].add(p)
                        indeg[p] += 1
        order: list[int] = [u for u in range(self.part_count) if indeg[u] == 0]
        head = 0
        while head < len(order):
            u = order[head]
            head += 1
            for v in succ[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    order.append(v)
        if len(order) != self.part_count:  # unreachable when _find_cycle passed
            raise CyclicNetwork("demand projection order does not exist")
        return order

    def with_parameters(
        self,
        capacities: dict[int, float] | None = None,
        leads: dict[int, float] | None = None,
    ) -> "SupplyChainNetwork":
        """Copy with new capacities / lead times (keyed by 1-based process id).

        Structure (parts, weights, graph) is unchanged, so the derived
        views are shared and only the rate/lead tables are rebuilt; a lead
        override sets lead_min = lead_max.
        """
        capacities = capacities or {}
        leads = leads or {}
        procs = []
        for proc in self.processes:
            kw = {}
            if proc.id in capacities:
                kw["capacity"] = float(capacities[proc.id])
            if proc.id in leads:
                kw["lead_min"] = float(leads[proc.id])
                kw["lead_max"] = float(leads[proc.id])
            procs.append(replace(proc, **kw) if kw else proc)
        clone = object.__new__(SupplyChainNetwork)
        clone.__dict__.update(self.__dict__)
        clone.processes = tuple(procs)
        clone.capacity = np.array([p.capacity for p in procs])
        clone.lead_min = np.array([p.lead_min for p in procs])
        clone.lead_max = np.array([p.lead_max for p in procs])
        clone.capacity_list = [p.capacity for p in procs]
        clone.lead_min_list = [p.lead_min for p in procs]
        clone.lead_max_list = [p.lead_max for p in procs]
        shared = np.zeros(self.part_count)
        for proc in procs:
            for p, w in proc.consumed:
                shared[p] += w * proc.capacity
        clone.shared_draw = shared
        return clone

    @property
    def cycle(self) -> tuple[PartId, ...] | None:
        return self._cycle

    @property
    def demand_order(self) -> list[PartId]:
        if self._demand_order is None:
            raise CyclicNetwork(f"network has a part cycle: {'->'.join(map(part_name, self._cycle))}")
        return self._demand_order

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SupplyChainNetwork)
            and self.part_count == other.part_count
            and self.processes == other.processes
        )

    def __repr__(self) -> str:
        return f"SupplyChainNetwork(n_processes={self.n_processes}, part_count={self.part_count})"


def validate_network(net: SupplyChainNetwork, require_acyclic: bool = False) -> ValidationReport:
    """Structural validation: derived raw/final sets, cycles, orphan parts.

    Raises CyclicNetwork only when ``require_acyclic`` is set (pull-mode
    simulation needs an acyclic network; push tolerates cycles).
    """
    report = ValidationReport(
        raw=net.raw_parts,
        final=net.final_parts,
        cycle=net.cycle,
        unreferenced=net.unreferenced,
    )
    if require_acyclic and report.cycle is not None:
        raise CyclicNetwork(
            "network has a part cycle: " + "->".join(part_name(p) for p in report.cycle)
        )
    return report


def classify_parts(net: SupplyChainNetwork) -> tuple[frozenset[PartId], frozenset[PartId]]:
    """(raw, final) part sets: consumed-never-produced and produced-never-consumed."""
    return net.raw_parts, net.final_parts


@dataclass
class SystemState:
    """Mutable per-run simulation state.

    ``x`` is the part-count vector.  ``c`` accumulates consumption per part
    and ``g_hat`` accumulated direct orders (pull mode).  ``next_refill``
    holds the arrival time of the pending back order per part, or the
    sentinel (> horizon) when none is pending.  ``delivered`` accumulates
    order withdrawals per part.

    Vectors are plain lists: the engine touches one or two scalar entries
    per process per bucket, where list access is several times faster than
    array access.
    """

    t: float
    x: list[float]
    c: list[float]
    g_hat: list[float]
    next_refill: list[float]
    delivered: list[float]

    @classmethod
    def initial(cls, x0: Sequence[float], sentinel: float) -> "SystemState":
        x = [float(v) for v in x0]
        if any(v < 0 for v in x):
            raise ModelError("initial part counts must be non-negative")
        p = len(x)
        return cls(
            t=0.0,
            x=x,
            c=[0.0] * p,
            g_hat=[0.0] * p,
            next_refill=[sentinel] * p,
            delivered=[0.0] * p,
        )

    def copy(self) -> "SystemState":
        return SystemState(
            t=self.t,
            x=list(self.x),
            c=list(self.c),
            g_hat=list(self.g_hat),
            next_refill=list(self.next_refill),
            delivered=list(self.delivered),
        )


@dataclass(frozen=True)
class QueueEntry:
    process: int  # 0-based process index
    quantity: float
    earliest: float
    span: float


class DelayQueue:
    """In-flight production batches, stored as parallel arrays.

    Each batch remembers which process fired, the undrained quantity, the
    earliest completion time and the remaining completion span.  Batches
    drain proportionally (deterministic) or binomially (stochastic) as the
    clock passes through their span; exhausted rows are compacted away.
    """

    __slots__ = ("pid", "qty", "earliest", "span", "size", "_cap")

    def __init__(self, capacity: int = 64):
        self._cap = capacity
        self.pid = np.empty(capacity, dtype=np.intp)
        self.qty = np.empty(capacity, dtype=np.float64)
        self.earliest = np.empty(capacity, dtype=np.float64)
        self.span = np.empty(capacity, dtype=np.float64)
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def append(self, process: int, quantity: float, earliest: float, span: float) -> None:
        if quantity < 0 or span < 0:
            raise ModelError("queue entries need quantity >= 0 and span >= 0")
        if self.size == self._cap:
            self._grow()
        k = self.size
        self.pid[k] = process
        self.qty[k] = quantity
        self.earliest[k] = earliest
        self.span[k] = span
        self.size = k + 1

    def _grow(self) -> None:
        self._cap *= 2
        for name in ("pid", "qty", "earliest", "span"):
            arr = getattr(self, name)
            new = np.empty(self._cap, dtype=arr.dtype)
            new[: self.size] = arr[: self.size]
            setattr(self, name, new)

    def compact(self) -> None:
        """Drop exhausted batches (state-neutral: nothing left to drain)."""
        n = self.size
        if n == 0:
            return
        live = (self.qty[:n] > EPS) & (self.span[:n] > EPS)
        k = int(live.sum())
        if k == n:
            return
        for name in ("pid", "qty", "earliest", "span"):
            arr = getattr(self, name)
            arr[:k] = arr[:n][live]
        self.size = k

    def entries(self) -> Iterator[QueueEntry]:
        for k in range(self.size):
            yield QueueEntry(
                process=int(self.pid[k]),
                quantity=float(self.qty[k]),
                earliest=float(self.earliest[k]),
                span=float(self.span[k]),
            )


@dataclass(frozen=True)
class RefillRule:
    """Back-order rule for one raw part.

    When inventory drops to ``safety_stock`` or below, a back order is
    placed and arrives after ``delivery_delay`` days.  Variant ``fixed``
    orders ``refill_amount``; variant ``top-up`` orders
    ``safety_stock - inventory + refill_amount``.
    """

    safety_stock: float
    refill_amount: float
    delivery_delay: float
    variant: str = "fixed"

    def __post_init__(self) -> None:
        if self.refill_amount <= 0:
            raise ModelError("refill_amount must be > 0")
        if self.delivery_delay < 0:
            raise ModelError("delivery_delay must be >= 0")
        if self.variant not in ("fixed", "top-up"):
            raise ModelError(f"unknown refill variant {self.variant!r}")

    def back_order(self, inventory: float) -> float:
        if inventory > self.safety_stock:
            return 0.0
        if self.variant == "fixed":
            return self.refill_amount
        return self.safety_stock - inventory + self.refill_amount


@dataclass(frozen=True)
class InventoryPolicy:
    """Refill rules keyed by raw part."""

    rules: tuple[tuple[PartId, RefillRule], ...]

    def __post_init__(self) -> None:
        parts = [p for p, _ in self.rules]
        if len(parts) != len(set(parts)):
            raise ModelError("duplicate part in inventory policy")

    @classmethod
    def of(cls, mapping: dict[PartId, RefillRule]) -> "InventoryPolicy":
        return cls(tuple(sorted(mapping.items())))

    def items(self) -> tuple[tuple[PartId, RefillRule], ...]:
        return self.rules


@dataclass(frozen=True)
class OrderEvent:
    time: float
    part: PartId
    quantity: int

    def __post_init__(self) -> None:
        if self.quantity <= 0 or int(self.quantity) != self.quantity:
            raise ModelError("order quantities must be positive integers")
        if self.time < 0:
            raise ModelError("order times must be >= 0")


@dataclass(frozen=True)
class OrderStream:
    """Time-sorted incoming orders plus the fulfilment policy tag.

    ``final-product-priority`` reserves parts for final-product production
    before spare-part withdrawals; ``fifo`` treats all orders alike.
    """

    events: tuple[OrderEvent, ...] = ()
    policy: str = "final-product-priority"

    def __post_init__(self) -> None:
        if self.policy not in ("fifo", "final-product-priority"):
            raise ModelError(f"unknown order policy {self.policy!r}")
        times = [e.time for e in self.events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ModelError("order events must be sorted by time")

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class SimConfig:
    """Run parameters: horizon, bucket size, push/pull mode, noise switch."""

    horizon: float
    dt: float
    mode: str = "push"
    stochastic: bool = False
    rng_seed: int = 0
    rate_policy: str = "exclusive"  # "shared" enables the fair-split rate rule

    def __post_init__(self) -> None:
        if not (0 < self.dt <= self.horizon):
            raise ModelError(f"need 0 < dt <= horizon, got dt={self.dt}, horizon={self.horizon}")
        if self.mode not in ("push", "pull"):
            raise ModelError(f"unknown mode {self.mode!r}")
        if self.rate_policy not in ("exclusive", "shared"):
            raise ModelError(f"unknown rate_policy {self.rate_policy!r}")

    @property
    def sentinel(self) -> float:
        """Next-refill time meaning "no back order pending" (any value > horizon)."""
        return self.horizon + 1.0

    def with_dt(self, dt: float) -> "SimConfig":
        return replace(self, dt=dt)
