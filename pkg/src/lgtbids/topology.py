"""Layered directed graph of a wireless cell.

Nodes are partitioned into layers by hop count from the base station:
the base station alone forms layer 1, its direct children layer 2, and
so on out to the cell edge. Only edges between consecutive layers are
accepted; those are the links the detection pipeline evaluates.

Topologies are immutable. Membership changes produce a fresh topology
with the layering recomputed from scratch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

log = logging.getLogger(__name__)


class NodeKind(str, Enum):
    """Roles a vertex can play in the cell."""

    BS = "BS"
    SCA = "SCA"
    RELAY = "Relay"
    CU = "CU"
    D2D_DEVICE = "D2DDevice"
    VEHICLE = "Vehicle"
    SENSOR = "Sensor"
    SPECTRUM_TX = "SpectrumTx"
    SPECTRUM_RX = "SpectrumRx"


class TopologyError(Exception):
    """Base class for topology construction and lookup failures."""


class NoBaseStationError(TopologyError):
    pass


class DuplicateBaseStationError(TopologyError):
    pass


class DanglingEdgeError(TopologyError):
    pass


class IntraLayerEdgeError(TopologyError):
    pass


class UnknownLeaveIdError(TopologyError):
    pass


class IsBaseStationError(TopologyError):
    pass


class NoInboundEdgeError(TopologyError):
    pass


class UnreachableNodeError(TopologyError):
    """Raised when nodes cannot be reached from the base station."""

    def __init__(self, node_ids: Iterable[str]):
        self.node_ids = tuple(sorted(node_ids))
        super().__init__(
            "nodes unreachable from the base station: " + ", ".join(self.node_ids)
        )


@dataclass(frozen=True)
class Node:
    """A vertex of the cell graph."""

    id: str
    kind: NodeKind
    tx_power_dbm: float
    power_consumption_w: float
    mobile: bool = False

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("node id must be non-empty")
        if self.power_consumption_w <= 0:
            raise ValueError(f"node {self.id}: power_consumption_w must be > 0")


@dataclass(frozen=True)
class Edge:
    """A directed wireless link from a node to one in the next layer."""

    src: str
    dst: str
    distance_m: float
    entity_depths_m: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "entity_depths_m", tuple(float(w) for w in self.entity_depths_m)
        )
        if self.src == self.dst:
            raise ValueError(f"edge {self.src}->{self.dst}: self-loop")
        if self.distance_m <= 0:
            raise ValueError(f"edge {self.src}->{self.dst}: distance must be > 0")
        if any(w < 0 for w in self.entity_depths_m):
            raise ValueError(f"edge {self.src}->{self.dst}: entity depth < 0")

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class LayeredTopology:
    """Immutable node/edge sets plus the hop-count layer partition.

    ``layers[0]`` is layer 1 (the base station); ids inside a layer are
    sorted so identical inputs always produce identical partitions.
    """

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    layers: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})
        object.__setattr__(
            self,
            "_layer_index",
            {nid: i + 1 for i, layer in enumerate(self.layers) for nid in layer},
        )
        inbound: dict[str, list[Edge]] = {}
        for e in self.edges:
            inbound.setdefault(e.dst, []).append(e)
        object.__setattr__(
            self,
            "_in_edges",
            {d: tuple(sorted(es, key=lambda e: e.key)) for d, es in inbound.items()},
        )

    def node(self, node_id: str) -> Node:
        try:
            return self._by_id[node_id]  # type: ignore[attr-defined]
        except KeyError:
            raise TopologyError(f"unknown node id: {node_id}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._by_id  # type: ignore[attr-defined]

    def base_station(self) -> Node:
        return self.node(self.layers[0][0])

    def layer_of(self, node_id: str) -> int:
        try:
            return self._layer_index[node_id]  # type: ignore[attr-defined]
        except KeyError:
            raise TopologyError(f"unknown node id: {node_id}") from None

    def in_edges(self, node_id: str) -> tuple[Edge, ...]:
        return self._in_edges.get(node_id, ())  # type: ignore[attr-defined]

    def non_bs_ids(self) -> tuple[str, ...]:
        """Every node except the base station, in (layer, id) order."""
        return tuple(nid for layer in self.layers[1:] for nid in layer)

    def layer_sizes(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.layers)


def build_topology(nodes: Sequence[Node], edges: Sequence[Edge]) -> LayeredTopology:
    """Build the layered cell graph from node and edge descriptions.

    Layers come from a breadth-first walk along edge direction starting
    at the base station. Rejects graphs with no (or several) base
    stations, edges naming unknown nodes, nodes the walk cannot reach,
    and edges that do not join consecutive layers.
    """
    node_list = sorted(nodes, key=lambda n: n.id)
    edge_list = sorted(edges, key=lambda e: e.key)

    ids: set[str] = set()
    for n in node_list:
        if n.id in ids:
            raise TopologyError(f"duplicate node id: {n.id}")
        ids.add(n.id)

    stations = [n for n in node_list if n.kind is NodeKind.BS]
    if not stations:
        raise NoBaseStationError("scenario declares no base station node")
    if len(stations) > 1:
        raise DuplicateBaseStationError(
            "more than one base station: " + ", ".join(n.id for n in stations)
        )
    bs_id = stations[0].id

    seen_keys: set[tuple[str, str]] = set()
    adjacency: dict[str, list[str]] = {}
    for e in edge_list:
        for endpoint in (e.src, e.dst):
            if endpoint not in ids:
                raise DanglingEdgeError(
                    f"edge {e.src}->{e.dst} references unknown node {endpoint}"
                )
        if e.key in seen_keys:
            raise TopologyError(f"duplicate edge {e.src}->{e.dst}")
        seen_keys.add(e.key)
        adjacency.setdefault(e.src, []).append(e.dst)

    hops = {bs_id: 0}
    frontier = [bs_id]
    while frontier:
        nxt: list[str] = []
        for nid in frontier:
            for child in adjacency.get(nid, ()):
                if child not in hops:
                    hops[child] = hops[nid] + 1
                    nxt.append(child)
        frontier = nxt

    unreachable = ids - hops.keys()
    if unreachable:
        raise UnreachableNodeError(unreachable)

    for e in edge_list:
        if hops[e.dst] != hops[e.src] + 1:
            raise IntraLayerEdgeError(
                f"edge {e.src}->{e.dst} joins layer {hops[e.src] + 1} "
                f"to layer {hops[e.dst] + 1}; only consecutive layers are allowed"
            )

    depth = max(hops.values())
    layers = tuple(
        tuple(sorted(nid for nid, h in hops.items() if h == level))
        for level in range(depth + 1)
    )
    return LayeredTopology(tuple(node_list), tuple(edge_list), layers)


def update_membership(
    topo: LayeredTopology,
    join_nodes: Sequence[Node] = (),
    join_edges: Sequence[Edge] = (),
    leaves: Sequence[str] = (),
) -> LayeredTopology:
    """Apply joins and leaves, returning a freshly layered topology.

    The original topology is untouched. Edges incident to a leaving
    node are dropped with it; everything else is revalidated by
    ``build_topology``, so a leave that strands part of the cell raises
    ``UnreachableNodeError``.
    """
    unknown = [nid for nid in leaves if not topo.has_node(nid)]
    if unknown:
        raise UnknownLeaveIdError(
            "leave ids not in topology: " + ", ".join(sorted(unknown))
        )
    gone = set(leaves)
    nodes = [n for n in topo.nodes if n.id not in gone]
    nodes.extend(join_nodes)
    edges = [e for e in topo.edges if e.src not in gone and e.dst not in gone]
    edges.extend(join_edges)
    return build_topology(nodes, edges)


def parent_edge(
    topo: LayeredTopology,
    node_id: str,
    capacities: Optional[Mapping[tuple[str, str], float]] = None,
) -> Edge:
    """Resolve the inbound edge carrying a node's link budget.

    With a single inbound edge the answer is immediate. With several,
    ``capacities`` (achieved capacity per edge key) must be supplied and
    the maximum-capacity edge wins; ties go to the lexicographically
    smallest source id.
    """
    node = topo.node(node_id)
    if node.kind is NodeKind.BS:
        raise IsBaseStationError("the base station has no parent edge")
    inbound = topo.in_edges(node_id)
    if not inbound:
        raise NoInboundEdgeError(f"node {node_id} has no inbound edge")
    if len(inbound) == 1:
        return inbound[0]
    if capacities is None:
        raise TopologyError(
            f"node {node_id} has {len(inbound)} inbound edges; "
            "per-edge capacities are required to pick the detection link"
        )
    try:
        ranked = sorted(inbound, key=lambda e: (-capacities[e.key], e.src))
    except KeyError as exc:
        raise TopologyError(f"missing capacity for edge {exc.args[0]}") from None
    chosen = ranked[0]
    log.debug(
        "parent edge for %s: %s->%s (capacity %.6g, %d candidates)",
        node_id,
        chosen.src,
        chosen.dst,
        capacities[chosen.key],
        len(inbound),
    )
    return chosen


def edge_list_rows(topo: LayeredTopology) -> list[tuple[str, str, int, int, float]]:
    """Flat (src, dst, src_layer, dst_layer, distance_m) rows for export."""
    return [
        (e.src, e.dst, topo.layer_of(e.src), topo.layer_of(e.dst), e.distance_m)
        for e in topo.edges
    ]
