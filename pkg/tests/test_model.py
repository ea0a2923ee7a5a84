"""Structural model tests: network validation, classification, queue basics."""

import numpy as np
import pytest

from lleap import (
    CyclicNetwork,
    DelayQueue,
    EmptyProcessList,
    InventoryPolicy,
    ModelError,
    OrderEvent,
    OrderStream,
    ProcessSpec,
    RefillRule,
    SimConfig,
    SupplyChainNetwork,
    classify_parts,
    get_scenario,
    validate_network,
)


def chain(*caps, lead=0.0):
    """A -> B -> ... linear chain with unit weights."""
    procs = [
        ProcessSpec(i + 1, ((i, 1),), ((i + 1, 1),), capacity=c, lead_min=lead, lead_max=lead)
        for i, c in enumerate(caps)
    ]
    return SupplyChainNetwork(procs, part_count=len(caps) + 1)


class TestProcessSpec:
    def test_rejects_empty_sides(self):
        with pytest.raises(ModelError):
            ProcessSpec(1, (), ((0, 1),), capacity=1, lead_min=0, lead_max=0)

    def test_rejects_duplicate_part(self):
        with pytest.raises(ModelError, match="duplicate"):
            ProcessSpec(1, ((0, 1), (0, 2)), ((1, 1),), capacity=1, lead_min=0, lead_max=0)

    def test_rejects_bad_leads(self):
        with pytest.raises(ModelError):
            ProcessSpec(1, ((0, 1),), ((1, 1),), capacity=1, lead_min=5, lead_max=2)

    def test_rejects_fractional_weight(self):
        with pytest.raises(ModelError):
            ProcessSpec(1, ((0, 1.5),), ((1, 1),), capacity=1, lead_min=0, lead_max=0)


class TestValidation:
    def test_example_network_classification(self):
        # the five-process push system: raw {P1,P2,P3}, final {P8}
        net = get_scenario("push_6_1").network
        report = validate_network(net)
        assert report.raw == frozenset({0, 1, 2})
        assert report.final == frozenset({7})
        assert report.cycle is None
        assert report.ok

    def test_single_process(self):
        net = chain(1.0)
        raw, final = classify_parts(net)
        assert raw == frozenset({0})
        assert final == frozenset({1})

    def test_chain_classification(self):
        net = chain(1.0, 2.0)
        raw, final = classify_parts(net)
        assert raw == frozenset({0})
        assert final == frozenset({2})

    def test_disjoint_chains_union(self):
        procs = [
            ProcessSpec(1, ((0, 1),), ((1, 1),), capacity=1, lead_min=0, lead_max=0),
            ProcessSpec(2, ((2, 1),), ((3, 1),), capacity=1, lead_min=0, lead_max=0),
        ]
        net = SupplyChainNetwork(procs, part_count=4)
        raw, final = classify_parts(net)
        assert raw == frozenset({0, 2})
        assert final == frozenset({1, 3})

    def test_self_loop_is_cyclic(self):
        proc = ProcessSpec(1, ((1, 1),), ((1, 1),), capacity=1, lead_min=0, lead_max=0)
        net = SupplyChainNetwork([proc], part_count=2)
        report = validate_network(net)
        assert report.cycle is not None
        with pytest.raises(CyclicNetwork):
            validate_network(net, require_acyclic=True)

    def test_two_process_cycle(self):
        procs = [
            ProcessSpec(1, ((0, 1),), ((1, 1),), capacity=1, lead_min=0, lead_max=0),
            ProcessSpec(2, ((1, 1),), ((0, 1),), capacity=1, lead_min=0, lead_max=0),
        ]
        net = SupplyChainNetwork(procs, part_count=2)
        assert net.cycle is not None
        with pytest.raises(CyclicNetwork):
            net.demand_order

    def test_transport_network_classification(self):
        # transport-augmented system: raw {P1,P2,P3}, final {P13}
        net = get_scenario("pull_6_2").network
        raw, final = classify_parts(net)
        assert raw == frozenset({0, 1, 2})
        assert final == frozenset({12})

    def test_empty_process_list(self):
        with pytest.raises(EmptyProcessList):
            SupplyChainNetwork([], part_count=3)

    def test_unreferenced_part_reported(self):
        net = SupplyChainNetwork(
            [ProcessSpec(1, ((0, 1),), ((1, 1),), capacity=1, lead_min=0, lead_max=0)],
            part_count=3,
        )
        assert validate_network(net).unreferenced == frozenset({2})

    def test_process_ids_must_be_sequential(self):
        with pytest.raises(ModelError):
            SupplyChainNetwork(
                [ProcessSpec(2, ((0, 1),), ((1, 1),), capacity=1, lead_min=0, lead_max=0)],
                part_count=2,
            )


class TestWithParameters:
    def test_override_keeps_structure(self):
        net = get_scenario("push_6_1").network
        net2 = net.with_parameters(capacities={5: 3.0}, leads={3: 12.5})
        assert net2.capacity_list[4] == 3.0
        assert net2.lead_min_list[2] == net2.lead_max_list[2] == 12.5
        assert net2.processes[0] == net.processes[0]
        assert net2.raw_parts == net.raw_parts
        # original untouched
        assert net.capacity_list[4] == 2.0

    def test_shared_draw_updated(self):
        net = chain(4.0)
        net2 = net.with_parameters(capacities={1: 10.0})
        assert net2.shared_draw[0] == 10.0
        assert net.shared_draw[0] == 4.0


class TestDelayQueue:
    def test_append_and_entries(self):
        q = DelayQueue(capacity=2)
        q.append(0, 5.0, 1.0, 2.0)
        q.append(1, 3.0, 4.0, 8.0)
        q.append(0, 1.0, 0.0, 1.0)  # forces growth
        entries = list(q.entries())
        assert len(entries) == 3
        assert entries[1].process == 1
        assert entries[1].quantity == 3.0

    def test_compact_drops_exhausted(self):
        q = DelayQueue()
        q.append(0, 0.0, 1.0, 2.0)
        q.append(1, 4.0, 1.0, 2.0)
        q.append(2, 5.0, 1.0, 0.0)
        q.compact()
        assert [e.process for e in q.entries()] == [1]

    def test_rejects_negative_quantity(self):
        q = DelayQueue()
        with pytest.raises(ModelError):
            q.append(0, -1.0, 0.0, 1.0)


class TestPolicies:
    def test_fixed_back_order(self):
        rule = RefillRule(safety_stock=200, refill_amount=250, delivery_delay=20)
        assert rule.back_order(150) == 250
        assert rule.back_order(200) == 250  # at the threshold still triggers
        assert rule.back_order(201) == 0

    def test_top_up_back_order(self):
        rule = RefillRule(safety_stock=200, refill_amount=250, delivery_delay=20, variant="top-up")
        assert rule.back_order(150) == 200 - 150 + 250
        assert rule.back_order(500) == 0

    def test_policy_rejects_duplicates(self):
        rule = RefillRule(safety_stock=1, refill_amount=1, delivery_delay=0)
        with pytest.raises(ModelError):
            InventoryPolicy(((0, rule), (0, rule)))

    def test_order_stream_sorted(self):
        with pytest.raises(ModelError):
            OrderStream((OrderEvent(5, 0, 1), OrderEvent(1, 0, 1)))

    def test_order_quantity_positive_integer(self):
        with pytest.raises(ModelError):
            OrderEvent(1.0, 0, 0)
        with pytest.raises(ModelError):
            OrderEvent(1.0, 0, 2.5)


class TestSimConfig:
    def test_dt_bounds(self):
        with pytest.raises(ModelError):
            SimConfig(horizon=10, dt=0)
        with pytest.raises(ModelError):
            SimConfig(horizon=10, dt=11)

    def test_sentinel_exceeds_horizon(self):
        cfg = SimConfig(horizon=10, dt=1)
        assert cfg.sentinel > cfg.horizon
