"""Shared fixtures and small generators for the test suite."""

from __future__ import annotations

import random

import pytest

from lgtbids import (
    BoundsEnvelope,
    ChannelParams,
    Edge,
    LinkBudget,
    Node,
    NodeKind,
    build_topology,
    fixture_path,
    load_scenario,
)


@pytest.fixture(scope="session")
def table3_scenario():
    return load_scenario(fixture_path("table3.scenario"))


@pytest.fixture(scope="session")
def table3_clean_scenario():
    return load_scenario(fixture_path("table3_clean.scenario"))


@pytest.fixture(scope="session")
def table3_topo(table3_scenario):
    return build_topology(table3_scenario.nodes, table3_scenario.edges)


@pytest.fixture(scope="session")
def params28():
    return ChannelParams(
        frequency_hz=28e9,
        bandwidth_hz=800e6,
        noise_dbm=-106.0,
        pathloss_exponent=2.0,
        gamma_per_m=0.06,
    )


def mk_node(nid: str, kind=NodeKind.CU, tx=23.0, pcc=1.0, mobile=False) -> Node:
    return Node(nid, kind, tx, pcc, mobile)


def mk_budget(capacity: float, eaves: float = 0.0, pcc: float = 1.0) -> LinkBudget:
    """Stub budget with a chosen capacity; derived fields kept coherent."""
    sr = max(capacity - eaves, 0.0)
    return LinkBudget(
        pathloss_db=100.0,
        extra_loss_db=0.0,
        snr_linear=1.0,
        capacity_bps=capacity,
        eavesdropper_capacity_bps=eaves,
        secrecy_rate_bps=sr,
        energy_efficiency_bps_per_w=capacity / pcc,
    )


def mk_envelope(
    sr=(1.0, 2.0, 1.5),
    ee=(10.0, 20.0, 15.0),
) -> BoundsEnvelope:
    """(lower, upper, achieved) per metric."""
    return BoundsEnvelope(
        secrecy_lower_bps=sr[0],
        secrecy_upper_bps=sr[1],
        ee_lower=ee[0],
        ee_upper=ee[1],
        secrecy_achieved_bps=sr[2],
        ee_achieved=ee[2],
    )


def scenario_budgets(scenario, achieved_fraction: float = 0.5):
    """Deterministic per-node budgets for a scenario: every edge runs at
    the given fraction of its worst-case obstruction loss."""
    from lgtbids import NodeBudget, extra_loss_db, link_bounds, link_budget, parent_edge

    topo = build_topology(scenario.nodes, scenario.edges)
    params = scenario.channel
    edge_states = {}
    for edge in topo.edges:
        dst = topo.node(edge.dst)
        pe_max = extra_loss_db(params, edge.entity_depths_m)
        achieved = pe_max * achieved_fraction
        eaves = scenario.eavesdropper.capacity_for(params, edge, dst.tx_power_dbm)
        edge_states[edge.key] = NodeBudget(
            edge=edge,
            power_consumption_w=dst.power_consumption_w,
            budget=link_budget(
                params,
                distance_m=edge.distance_m,
                entity_depths_m=edge.entity_depths_m,
                tx_power_dbm=dst.tx_power_dbm,
                power_consumption_w=dst.power_consumption_w,
                eavesdropper_bps=eaves,
                achieved_extra_loss_db=achieved,
            ),
            envelope=link_bounds(
                params, edge, dst.tx_power_dbm, dst.power_consumption_w, eaves, achieved
            ),
        )
    budgets = {}
    for nid in topo.non_bs_ids():
        inbound = topo.in_edges(nid)
        caps = {e.key: edge_states[e.key].budget.capacity_bps for e in inbound}
        chosen = parent_edge(topo, nid, caps if len(inbound) > 1 else None)
        budgets[nid] = edge_states[chosen.key]
    return topo, budgets, edge_states


def random_layered_instance(rng: random.Random, max_nodes: int = 30):
    """Random tree-shaped cell plus a few extra consecutive-layer edges."""
    n = rng.randint(2, max_nodes)
    nodes = [Node("bs", NodeKind.BS, 30.0, 20.0)]
    edges = []
    for i in range(1, n):
        parent = rng.choice(nodes).id
        nid = f"n{i:02d}"
        nodes.append(Node(nid, NodeKind.CU, 23.0, 1.0))
        edges.append(Edge(parent, nid, rng.uniform(10.0, 240.0)))
    topo = build_topology(nodes, edges)
    existing = {e.key for e in edges}
    extras = []
    deep = [nid for nid in topo.non_bs_ids() if topo.layer_of(nid) >= 3]
    for _ in range(rng.randint(0, 3)):
        if not deep:
            break
        dst = rng.choice(deep)
        sources = [
            s
            for s in topo.layers[topo.layer_of(dst) - 2]
            if (s, dst) not in existing
        ]
        if not sources:
            continue
        src = rng.choice(sources)
        existing.add((src, dst))
        extras.append(Edge(src, dst, rng.uniform(10.0, 240.0)))
    if extras:
        topo = build_topology(nodes, edges + extras)
    return topo
