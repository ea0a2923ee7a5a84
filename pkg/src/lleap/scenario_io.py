"""Scenario files: a line-oriented schema plus the built-in example systems.

A scenario file fully describes one simulation: the process network,
initial inventories, run configuration, inventory policy, order stream and
(optionally) the uncertainty block driving the estimators.

Grammar (one ``key = value`` pair per line, ``#`` starts a comment)::

    schema_version = 1
    name = my_scenario

    [network]
    parts = 8
    process = 1 | consume 1*P2 | produce 1*P4 | capacity 8 | lead 1 1

    [initial]
    P1 = 1000

    [config]
    horizon = 200
    dt = 2
    mode = push                # push | pull
    stochastic = false
    seed = 1
    rate_policy = exclusive    # exclusive | shared

    [policy]                   # optional; raw-part refill rules
    P1 = safety 200 | refill 200 | delay 15 | variant fixed

    [orders]                   # optional
    policy = final-product-priority
    order = at 1 | part P13 | qty 100
    order = repeat | start 100 | every 100 | until 3600 | part P13 | qty 100

    [uq]                       # optional
    param = capacity 1 | uniform 8 12
    param = initial P1 | uniform 800 1200
    param = lead 3 | uniform 10 20
    qoi = deliveries | deliveries_by P8 | by 300 | dt0 32
    qoi = time500 | delivery_time P13 | count 500 | cap 1500 | horizon 1500 | dt0 32

Unknown sections or keys are rejected.  ``serialize_scenario`` emits a
canonical form (repeat orders expanded, fixed key order), so load followed
by re-serialization is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import (
    InventoryPolicy,
    ModelError,
    OrderEvent,
    OrderStream,
    PartId,
    ProcessSpec,
    RefillRule,
    SimConfig,
    SupplyChainNetwork,
    part_name,
    validate_network,
)
from .uq import ParamSpec, QoISpec, QoIVariant, Uniform, UqBlock

__all__ = [
    "SCHEMA_VERSION",
    "Scenario",
    "ParseError",
    "ValidationError",
    "load_scenario",
    "parse_scenario",
    "serialize_scenario",
    "builtin_scenarios",
    "builtin_names",
    "get_scenario",
]

SCHEMA_VERSION = 1


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = f" (line {line})" if line is not None else ""
        which = f" [{field}]" if field else ""
        super().__init__(f"{message}{which}{where}")


class ValidationError(ValueError):
    """Scenario parsed but the model objects are structurally invalid."""


@dataclass
class Scenario:
    """One fully specified simulation problem."""

    name: str
    network: SupplyChainNetwork
    initial: np.ndarray
    config: SimConfig
    policy: InventoryPolicy | None
    orders: OrderStream
    uq: UqBlock | None

    def validation_report(self):
        return validate_network(self.network)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _parse_part(token: str, line: int) -> PartId:
    token = token.strip()
    if not token.startswith("P"):
        raise ParseError(f"expected a part name like P3, got {token!r}", line)
    try:
        idx = int(token[1:]) - 1
    except ValueError:
        raise ParseError(f"bad part name {token!r}", line) from None
    if idx < 0:
        raise ParseError(f"part numbers start at P1, got {token!r}", line)
    return idx


def _parse_num(token: str, line: int, field: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected a number, got {token!r}", line, field) from None


def _clauses(value: str) -> list[str]:
    return [c.strip() for c in value.split("|")]


def _parse_process(value: str, line: int) -> ProcessSpec:
    clauses = _clauses(value)
    if len(clauses) != 5:
        raise ParseError(
            "process needs 5 clauses: id | consume ... | produce ... | capacity x | lead a b",
            line,
            "process",
        )
    pid = int(_parse_num(clauses[0], line, "process id"))

    def parse_side(clause: str, keyword: str) -> tuple[tuple[PartId, int], ...]:
        if not clause.startswith(keyword):
            raise ParseError(f"expected '{keyword} ...'", line, "process")
        pairs = []
        for item in clause[len(keyword):].split("+"):
            item = item.strip()
            if "*" in item:
                w_str, p_str = item.split("*", 1)
                w = int(_parse_num(w_str, line, "weight"))
            else:
                w, p_str = 1, item
            pairs.append((_parse_part(p_str, line), w))
        return tuple(pairs)

    consumed = parse_side(clauses[1], "consume")
    produced = parse_side(clauses[2], "produce")
    if not clauses[3].startswith("capacity"):
        raise ParseError("expected 'capacity x'", line, "process")
    capacity = _parse_num(clauses[3].split()[1], line, "capacity")
    lead_tokens = clauses[4].split()
    if lead_tokens[0] != "lead" or len(lead_tokens) != 3:
        raise ParseError("expected 'lead min max'", line, "process")
    lead_min = _parse_num(lead_tokens[1], line, "lead")
    lead_max = _parse_num(lead_tokens[2], line, "lead")
    return ProcessSpec(
        id=pid, consumed=consumed, produced=produced,
        capacity=capacity, lead_min=lead_min, lead_max=lead_max,
    )


def _parse_keyed_clauses(clauses: list[str], line: int, field: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for c in clauses:
        tokens = c.split()
        if not tokens:
            raise ParseError("empty clause", line, field)
        if tokens[0] in out:
            raise ParseError(f"duplicate clause {tokens[0]!r}", line, field)
        out[tokens[0]] = tokens[1:]
    return out


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse and validate a scenario document."""
    section = None
    top: dict[str, str] = {}
    part_count: int | None = None
    processes: list[ProcessSpec] = []
    initial: dict[PartId, float] = {}
    config_kv: dict[str, str] = {}
    policy_rules: dict[PartId, RefillRule] = {}
    order_policy = "final-product-priority"
    order_events: list[OrderEvent] = []
    params: list[ParamSpec] = []
    variants: list[QoIVariant] = []

    known_sections = {"network", "initial", "config", "policy", "orders", "uq"}
    seen_sections: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in known_sections:
                raise ParseError(f"unknown section [{section}]", lineno)
            if section in seen_sections:
                raise ParseError(f"duplicate section [{section}]", lineno)
            seen_sections.add(section)
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno)
        key, value = (s.strip() for s in line.split("=", 1))

        if section is None:
            if key not in ("schema_version", "name"):
                raise ParseError(f"unknown top-level key {key!r}", lineno)
            top[key] = value
        elif section == "network":
            if key == "parts":
                part_count = int(_parse_num(value, lineno, "parts"))
            elif key == "process":
                try:
                    processes.append(_parse_process(value, lineno))
                except ModelError as exc:
                    raise ValidationError(str(exc)) from exc
            else:
                raise ParseError(f"unknown network key {key!r}", lineno)
        elif section == "initial":
            initial[_parse_part(key, lineno)] = _parse_num(value, lineno, "initial")
        elif section == "config":
            if key not in ("horizon", "dt", "mode", "stochastic", "seed", "rate_policy"):
                raise ParseError(f"unknown config key {key!r}", lineno)
            config_kv[key] = value
        elif section == "policy":
            part = _parse_part(key, lineno)
            kv = _parse_keyed_clauses(_clauses(value), lineno, "policy")
            unknown = set(kv) - {"safety", "refill", "delay", "variant"}
            if unknown:
                raise ParseError(f"unknown policy clause {unknown.pop()!r}", lineno)
            try:
                policy_rules[part] = RefillRule(
                    safety_stock=_parse_num(kv["safety"][0], lineno, "safety"),
                    refill_amount=_parse_num(kv["refill"][0], lineno, "refill"),
                    delivery_delay=_parse_num(kv["delay"][0], lineno, "delay"),
                    variant=kv.get("variant", ["fixed"])[0],
                )
            except KeyError as exc:
                raise ParseError(f"policy needs clause {exc.args[0]!r}", lineno, "policy") from None
            except ModelError as exc:
                raise ValidationError(str(exc)) from exc
        elif section == "orders":
            if key == "policy":
                order_policy = value
            elif key == "order":
                clauses = _clauses(value)
                kv = _parse_keyed_clauses(clauses[1:], lineno, "order")
                head = clauses[0].split()
                try:
                    if head[0] == "at":
                        t = _parse_num(head[1], lineno, "order time")
                        order_events.append(OrderEvent(
                            time=t,
                            part=_parse_part(kv["part"][0], lineno),
                            quantity=int(_parse_num(kv["qty"][0], lineno, "qty")),
                        ))
                    elif head[0] == "repeat":
                        unknown = set(kv) - {"start", "every", "until", "part", "qty"}
                        if unknown:
                            raise ParseError(f"unknown order clause {unknown.pop()!r}", lineno)
                        start = _parse_num(kv["start"][0], lineno, "start")
                        every = _parse_num(kv["every"][0], lineno, "every")
                        until = _parse_num(kv["until"][0], lineno, "until")
                        part = _parse_part(kv["part"][0], lineno)
                        qty = int(_parse_num(kv["qty"][0], lineno, "qty"))
                        if every <= 0:
                            raise ParseError("repeat needs every > 0", lineno)
                        t = start
                        while t <= until + 1e-9:
                            order_events.append(OrderEvent(time=t, part=part, quantity=qty))
                            t += every
                    else:
                        raise ParseError(f"order must start with 'at' or 'repeat', got {head[0]!r}", lineno)
                except KeyError as exc:
                    raise ParseError(f"order needs clause {exc.args[0]!r}", lineno, "order") from None
                except ModelError as exc:
                    raise ValidationError(str(exc)) from exc
            else:
                raise ParseError(f"unknown orders key {key!r}", lineno)
        elif section == "uq":
            if key == "param":
                clauses = _clauses(value)
                if len(clauses) != 2:
                    raise ParseError("param needs '<target> <which> | uniform lo hi'", lineno, "param")
                target_tokens = clauses[0].split()
                dist_tokens = clauses[1].split()
                if len(target_tokens) != 2 or len(dist_tokens) != 3 or dist_tokens[0] != "uniform":
                    raise ParseError("param needs '<target> <which> | uniform lo hi'", lineno, "param")
                target = target_tokens[0]
                if target == "initial":
                    index = _parse_part(target_tokens[1], lineno)
                else:
                    index = int(_parse_num(target_tokens[1], lineno, "process id"))
                try:
                    params.append(ParamSpec(
                        target=target,
                        index=index,
                        dist=Uniform(
                            _parse_num(dist_tokens[1], lineno, "lo"),
                            _parse_num(dist_tokens[2], lineno, "hi"),
                        ),
                    ))
                except ModelError as exc:
                    raise ValidationError(str(exc)) from exc
            elif key == "qoi":
                clauses = _clauses(value)
                if len(clauses) < 2:
                    raise ParseError("qoi needs '<name> | <kind> <part> | ...'", lineno, "qoi")
                vname = clauses[0].strip()
                kind_tokens = clauses[1].split()
                if len(kind_tokens) != 2:
                    raise ParseError("qoi kind clause must be '<kind> <part>'", lineno, "qoi")
                kind = kind_tokens[0]
                part = _parse_part(kind_tokens[1], lineno)
                kv = _parse_keyed_clauses(clauses[2:], lineno, "qoi")
                unknown = set(kv) - {"by", "count", "cap", "horizon", "stochastic", "dt0"}
                if unknown:
                    raise ParseError(f"unknown qoi clause {unknown.pop()!r}", lineno)
                try:
                    if kind == "deliveries_by":
                        qoi = QoISpec(kind=kind, part=part, horizon=_parse_num(kv["by"][0], lineno, "by"))
                    elif kind == "delivery_time":
                        qoi = QoISpec(
                            kind=kind,
                            part=part,
                            horizon=_parse_num(kv["cap"][0], lineno, "cap"),
                            count=int(_parse_num(kv["count"][0], lineno, "count")),
                        )
                    else:
                        raise ParseError(f"unknown qoi kind {kind!r}", lineno)
                except KeyError as exc:
                    raise ParseError(f"qoi needs clause {exc.args[0]!r}", lineno, "qoi") from None
                except ModelError as exc:
                    raise ValidationError(str(exc)) from exc
                variants.append(QoIVariant(
                    name=vname,
                    qoi=qoi,
                    stochastic="stochastic" in kv,
                    dt0=_parse_num(kv["dt0"][0], lineno, "dt0") if "dt0" in kv else 32.0,
                    horizon=_parse_num(kv["horizon"][0], lineno, "horizon") if "horizon" in kv else None,
                ))
            else:
                raise ParseError(f"unknown uq key {key!r}", lineno)

    if "schema_version" not in top:
        raise ParseError("missing schema_version", field="schema_version")
    if int(_parse_num(top["schema_version"], 0, "schema_version")) != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {top['schema_version']}", field="schema_version")
    if part_count is None:
        raise ParseError("missing [network] parts", field="parts")
    for key in ("horizon", "dt", "mode"):
        if key not in config_kv:
            raise ParseError(f"missing [config] {key}", field=key)

    try:
        network = SupplyChainNetwork(processes, part_count)
        config = SimConfig(
            horizon=float(config_kv["horizon"]),
            dt=float(config_kv["dt"]),
            mode=config_kv["mode"],
            stochastic=config_kv.get("stochastic", "false").lower() in ("true", "1", "yes"),
            rng_seed=int(config_kv.get("seed", "0")),
            rate_policy=config_kv.get("rate_policy", "exclusive"),
        )
        x0 = np.zeros(part_count)
        for part, v in initial.items():
            if part >= part_count:
                raise ValidationError(f"[initial] references {part_name(part)} beyond parts={part_count}")
            x0[part] = v
        policy = InventoryPolicy.of(policy_rules) if policy_rules else None
        orders = OrderStream(tuple(sorted(order_events, key=lambda e: (e.time, e.part))), order_policy)
        uq = UqBlock(tuple(params), tuple(variants)) if (params or variants) else None
        scenario = Scenario(
            name=top.get("name", Path(source).stem),
            network=network,
            initial=x0,
            config=config,
            policy=policy,
            orders=orders,
            uq=uq,
        )
    except ModelError as exc:
        raise ValidationError(str(exc)) from exc
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), source=str(path))


# ---------------------------------------------------------------------------
# serialization (canonical form)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    xf = float(x)
    if xf.is_integer() and abs(xf) < 1e15:
        return str(int(xf))
    return repr(xf)


def _fmt_side(pairs) -> str:
    return " + ".join(
        f"{w}*{part_name(p)}" if w != 1 else part_name(p) for p, w in pairs
    )


def serialize_scenario(s: Scenario) -> str:
    lines = [f"schema_version = {SCHEMA_VERSION}", f"name = {s.name}", ""]
    lines.append("[network]")
    lines.append(f"parts = {s.network.part_count}")
    for pr in s.network.processes:
        lines.append(
            f"process = {pr.id} | consume {_fmt_side(pr.consumed)} | produce {_fmt_side(pr.produced)}"
            f" | capacity {_fmt(pr.capacity)} | lead {_fmt(pr.lead_min)} {_fmt(pr.lead_max)}"
        )
    nz = np.flatnonzero(s.initial)
    if nz.size:
        lines += ["", "[initial]"]
        for p in nz:
            lines.append(f"{part_name(int(p))} = {_fmt(s.initial[p])}")
    c = s.config
    lines += [
        "",
        "[config]",
        f"horizon = {_fmt(c.horizon)}",
        f"dt = {_fmt(c.dt)}",
        f"mode = {c.mode}",
        f"stochastic = {'true' if c.stochastic else 'false'}",
        f"seed = {c.rng_seed}",
        f"rate_policy = {c.rate_policy}",
    ]
    if s.policy is not None:
        lines += ["", "[policy]"]
        for part, rule in s.policy.items():
            lines.append(
                f"{part_name(part)} = safety {_fmt(rule.safety_stock)} | refill {_fmt(rule.refill_amount)}"
                f" | delay {_fmt(rule.delivery_delay)} | variant {rule.variant}"
            )
    if len(s.orders):
        lines += ["", "[orders]", f"policy = {s.orders.policy}"]
        for ev in s.orders.events:
            lines.append(f"order = at {_fmt(ev.time)} | part {part_name(ev.part)} | qty {ev.quantity}")
    if s.uq is not None:
        lines += ["", "[uq]"]
        for p in s.uq.parameters:
            which = part_name(p.index) if p.target == "initial" else str(p.index)
            lines.append(f"param = {p.target} {which} | uniform {_fmt(p.dist.lo)} {_fmt(p.dist.hi)}")
        for v in s.uq.variants:
            q = v.qoi
            parts = [v.name, f"{q.kind} {part_name(q.part)}"]
            if q.kind == "deliveries_by":
                parts.append(f"by {_fmt(q.horizon)}")
            else:
                parts.append(f"count {q.count}")
                parts.append(f"cap {_fmt(q.horizon)}")
            if v.horizon is not None:
                parts.append(f"horizon {_fmt(v.horizon)}")
            if v.stochastic:
                parts.append("stochastic")
            parts.append(f"dt0 {_fmt(v.dt0)}")
            lines.append("qoi = " + " | ".join(parts))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# built-in scenarios
# ---------------------------------------------------------------------------

def _p(i: int) -> PartId:
    return i - 1


def _push_network() -> SupplyChainNetwork:
    procs = [
        ProcessSpec(1, ((_p(2), 1),), ((_p(4), 1),), capacity=8, lead_min=1, lead_max=1),
        ProcessSpec(2, ((_p(3), 1),), ((_p(5), 1),), capacity=8, lead_min=1, lead_max=1),
        ProcessSpec(3, ((_p(1), 1), (_p(4), 1)), ((_p(6), 1),), capacity=4, lead_min=10, lead_max=10),
        ProcessSpec(4, ((_p(5), 1),), ((_p(7), 1),), capacity=8, lead_min=1, lead_max=1),
        ProcessSpec(5, ((_p(6), 1), (_p(7), 1)), ((_p(8), 1),), capacity=2, lead_min=10, lead_max=10),
    ]
    return SupplyChainNetwork(procs, part_count=8)


def _transport_network() -> SupplyChainNetwork:
    # the five original processes re-wired to consume the transported
    # buffers P9..P12, plus five transport legs; the final product becomes P13
    transport_delays = [10, 10, 10, 50, 10]
    procs = [
        ProcessSpec(1, ((_p(2), 1),), ((_p(4), 1),), capacity=8, lead_min=1, lead_max=1),
        ProcessSpec(2, ((_p(3), 1),), ((_p(5), 1),), capacity=8, lead_min=1, lead_max=1),
        ProcessSpec(3, ((_p(1), 1), (_p(9), 1)), ((_p(6), 1),), capacity=4, lead_min=10, lead_max=10),
        ProcessSpec(4, ((_p(10), 1),), ((_p(7), 1),), capacity=8, lead_min=1, lead_max=1),
        ProcessSpec(5, ((_p(11), 1), (_p(12), 1)), ((_p(8), 1),), capacity=2, lead_min=10, lead_max=10),
    ]
    for k, delay in enumerate(transport_delays):
        procs.append(ProcessSpec(
            6 + k,
            ((_p(4 + k), 1),),
            ((_p(9 + k), 1),),
            capacity=8,
            lead_min=delay,
            lead_max=delay,
        ))
    return SupplyChainNetwork(procs, part_count=13)


def _pull_policy() -> InventoryPolicy:
    return InventoryPolicy.of({
        _p(1): RefillRule(safety_stock=200, refill_amount=200, delivery_delay=15),
        _p(2): RefillRule(safety_stock=200, refill_amount=250, delivery_delay=20),
        _p(3): RefillRule(safety_stock=200, refill_amount=300, delivery_delay=30),
    })


def _repeat(start: float, every: float, until: float, part: PartId, qty: int) -> list[OrderEvent]:
    out = []
    t = start
    while t <= until + 1e-9:
        out.append(OrderEvent(time=t, part=part, quantity=qty))
        t += every
    return out


def _build_push_6_1() -> Scenario:
    return Scenario(
        name="push_6_1",
        network=_push_network(),
        initial=np.array([1000.0, 500.0, 1000.0, 0, 0, 0, 0, 0]),
        config=SimConfig(horizon=200, dt=2, mode="push", stochastic=False, rng_seed=20240817),
        policy=None,
        orders=OrderStream(),
        uq=None,
    )


def _build_pull_6_2() -> Scenario:
    x0 = np.zeros(13)
    x0[:3] = 500
    events = []
    for t in (1, 100, 200):
        events.append(OrderEvent(time=t, part=_p(13), quantity=100))
    for part in (4, 5, 6, 7):
        events += _repeat(50, 50, 700, _p(part), 30)
    return Scenario(
        name="pull_6_2",
        network=_transport_network(),
        initial=x0,
        config=SimConfig(horizon=700, dt=2, mode="pull", stochastic=False, rng_seed=20240817),
        policy=_pull_policy(),
        orders=OrderStream(tuple(sorted(events, key=lambda e: (e.time, e.part)))),
        uq=None,
    )


def _push_parameters() -> list[ParamSpec]:
    u = lambda lo, hi: Uniform(lo, hi)
    caps = [u(8, 12), u(8, 12), u(4, 6), u(8, 12), u(1, 3)]
    leads = [u(1, 2), u(1, 2), u(10, 20), u(1, 2), u(10, 50)]
    params = [ParamSpec("capacity", i + 1, d) for i, d in enumerate(caps)]
    params += [
        ParamSpec("initial", _p(1), u(800, 1200)),
        ParamSpec("initial", _p(2), u(300, 700)),
        ParamSpec("initial", _p(3), u(800, 1200)),
    ]
    params += [ParamSpec("lead", i + 1, d) for i, d in enumerate(leads)]
    return params


def _build_uq_push_6_3() -> Scenario:
    base = _build_push_6_1()
    return Scenario(
        name="uq_push_6_3",
        network=base.network,
        initial=base.initial,
        config=SimConfig(horizon=300, dt=2, mode="push", stochastic=False, rng_seed=20240817),
        policy=None,
        orders=OrderStream(),
        uq=UqBlock(
            parameters=tuple(_push_parameters()),
            variants=(
                QoIVariant(
                    name="deliveries",
                    qoi=QoISpec(kind="deliveries_by", part=_p(8), horizon=300),
                    stochastic=False,
                    dt0=32.0,
                ),
            ),
        ),
    )


def _build_uq_pull_6_4() -> Scenario:
    x0 = np.zeros(13)
    x0[:3] = 500
    # final-product orders follow the day-1 start of the three-order pull
    # example: days 1, 101, ..., 3601
    events = _repeat(1, 100, 3650, _p(13), 100)
    for part in (4, 5, 6, 7):
        events += _repeat(30, 30, 3630, _p(part), 30)
    u = lambda lo, hi: Uniform(lo, hi)
    caps = [u(8, 12), u(8, 12), u(4, 6), u(8, 12), u(1, 3),
            u(7, 9), u(7, 9), u(7, 9), u(7, 9), u(1, 2)]
    leads = [u(1, 2), u(1, 2), u(10, 20), u(1, 2), u(10, 50),
             u(8, 12), u(8, 12), u(8, 12), u(40, 60), u(8, 12)]
    params = [ParamSpec("capacity", i + 1, d) for i, d in enumerate(caps)]
    params += [
        ParamSpec("initial", _p(1), u(800, 1200)),
        ParamSpec("initial", _p(2), u(300, 700)),
        ParamSpec("initial", _p(3), u(800, 1200)),
    ]
    params += [ParamSpec("lead", i + 1, d) for i, d in enumerate(leads)]
    return Scenario(
        name="uq_pull_6_4",
        network=_transport_network(),
        initial=x0,
        config=SimConfig(horizon=3650, dt=5, mode="pull", stochastic=False, rng_seed=20240817),
        policy=_pull_policy(),
        orders=OrderStream(tuple(sorted(events, key=lambda e: (e.time, e.part)))),
        uq=UqBlock(
            parameters=tuple(params),
            variants=(
                QoIVariant(
                    name="deliveries",
                    qoi=QoISpec(kind="deliveries_by", part=_p(13), horizon=3650),
                    stochastic=False,
                    dt0=32.0,
                ),
                QoIVariant(
                    name="time500",
                    qoi=QoISpec(kind="delivery_time", part=_p(13), horizon=1500, count=500),
                    stochastic=False,
                    dt0=32.0,
                    horizon=1500,
                ),
                QoIVariant(
                    name="time300s",
                    qoi=QoISpec(kind="delivery_time", part=_p(13), horizon=1000, count=300),
                    stochastic=True,
                    dt0=5.0,
                    horizon=1000,
                ),
            ),
        ),
    )


_BUILTINS = {
    "push_6_1": _build_push_6_1,
    "pull_6_2": _build_pull_6_2,
    "uq_push_6_3": _build_uq_push_6_3,
    "uq_pull_6_4": _build_uq_pull_6_4,
}


def builtin_names() -> tuple[str, ...]:
    return tuple(_BUILTINS)


def builtin_scenarios() -> dict[str, Scenario]:
    """The four built-in example systems, freshly constructed."""
    return {name: build() for name, build in _BUILTINS.items()}


def get_scenario(name_or_path: str) -> Scenario:
    """Resolve a builtin name or a scenario file path."""
    if name_or_path in _BUILTINS:
        return _BUILTINS[name_or_path]()
    path = Path(name_or_path)
    if not path.exists():
        raise FileNotFoundError(
            f"{name_or_path!r} is neither a builtin scenario ({', '.join(_BUILTINS)}) nor a file"
        )
    return load_scenario(path)
