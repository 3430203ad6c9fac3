"""Static domain description: grid locations, adjacency, radio nodes and targets."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple


class WorldError(ValueError):
    """Raised for malformed worlds or queries about unknown locations/nodes."""


class Location(NamedTuple):
    x: int
    y: int

    def __str__(self) -> str:
        return f"({self.x},{self.y})"


class NodeKind(str, enum.Enum):
    HOME_BASE = "home_base"
    RELAY = "relay"
    UAV = "uav"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    # None for UAVs; their position lives in the State.
    location: Location | None = None


def dist2(l1: Location, l2: Location) -> int:
    """Squared euclidean distance in grid units."""
    dx = l1[0] - l2[0]
    dy = l1[1] - l2[1]
    return dx * dx + dy * dy


@dataclass(frozen=True)
class WorldMap:
    locations: frozenset[Location]
    adjacency: Mapping[Location, frozenset[Location]]
    nodes: Mapping[str, Node]
    targets: Mapping[str, Location]
    radio_range: int
    # stable iteration orders, derived in __post_init__
    node_ids: tuple[str, ...] = field(init=False)
    uav_ids: tuple[str, ...] = field(init=False)
    static_ids: tuple[str, ...] = field(init=False)
    home_base: str = field(init=False)

    def __post_init__(self) -> None:
        if self.radio_range <= 0:
            raise WorldError("radio_range must be a positive integer")
        bases = [n.id for n in self.nodes.values() if n.kind is NodeKind.HOME_BASE]
        if len(bases) != 1:
            raise WorldError(f"exactly one home base required, found {len(bases)}")
        for nid, node in self.nodes.items():
            if nid != node.id:
                raise WorldError(f"node key {nid!r} does not match node id {node.id!r}")
            if node.kind is NodeKind.UAV:
                if node.location is not None:
                    raise WorldError(f"UAV {nid!r} must not carry a fixed location")
            elif node.location not in self.locations:
                raise WorldError(f"node {nid!r} placed off the map at {node.location}")
        for tid, loc in self.targets.items():
            if tid in self.nodes:
                raise WorldError(f"target id {tid!r} collides with a node id")
            if loc not in self.locations:
                raise WorldError(f"target {tid!r} placed off the map at {loc}")
        for loc, nbrs in self.adjacency.items():
            if loc not in self.locations:
                raise WorldError(f"adjacency mentions unknown location {loc}")
            if loc in nbrs:
                raise WorldError(f"adjacency is reflexive at {loc}")
            for other in nbrs:
                if loc not in self.adjacency.get(other, ()):
                    raise WorldError(f"adjacency not symmetric between {loc} and {other}")
        if not _connected(self.locations, self.adjacency):
            raise WorldError("adjacency graph is not connected")

        kind_order = {NodeKind.HOME_BASE: 0, NodeKind.RELAY: 1, NodeKind.UAV: 2}
        ordered = sorted(self.nodes.values(), key=lambda n: (kind_order[n.kind], _natural_key(n.id)))
        object.__setattr__(self, "node_ids", tuple(n.id for n in ordered))
        object.__setattr__(self, "uav_ids", tuple(n.id for n in ordered if n.kind is NodeKind.UAV))
        object.__setattr__(self, "static_ids", tuple(n.id for n in ordered if n.kind is not NodeKind.UAV))
        object.__setattr__(self, "home_base", bases[0])

    @property
    def range2(self) -> int:
        return self.radio_range * self.radio_range

    def kind(self, node_id: str) -> NodeKind:
        try:
            return self.nodes[node_id].kind
        except KeyError:
            raise WorldError(f"unknown node {node_id!r}") from None

    def is_uav(self, node_id: str) -> bool:
        return self.kind(node_id) is NodeKind.UAV

    def neighbors(self, loc: Location) -> frozenset[Location]:
        return neighbors(self, loc)

    def target_at(self, loc: Location) -> list[str]:
        return [t for t, tl in self.targets.items() if tl == loc]


def neighbors(world: WorldMap, loc: Location) -> frozenset[Location]:
    if loc not in world.locations:
        raise WorldError(f"unknown location {loc}")
    return world.adjacency.get(loc, frozenset())


def _natural_key(s: str) -> tuple:
    head = s.rstrip("0123456789")
    tail = s[len(head):]
    return (head, int(tail) if tail else -1, s)


def _connected(locations: frozenset[Location], adjacency: Mapping[Location, Iterable[Location]]) -> bool:
    if not locations:
        return True
    start = min(locations)
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt in adjacency.get(cur, ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return len(seen) == len(locations)


def grid_adjacency(
    width: int, height: int, spacing: int = 1, connectivity: int = 4
) -> tuple[frozenset[Location], dict[Location, frozenset[Location]]]:
    """Lattice of ``width x height`` waypoints ``spacing`` grid units apart.

    ``connectivity`` is 4 (von Neumann) or 8 (Moore).
    """
    if width <= 0 or height <= 0 or spacing <= 0:
        raise WorldError("grid dimensions and spacing must be positive")
    if connectivity == 4:
        offsets = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    elif connectivity == 8:
        offsets = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]
    else:
        raise WorldError(f"connectivity must be 4 or 8, got {connectivity}")
    locs = frozenset(Location(i * spacing, j * spacing) for i in range(width) for j in range(height))
    adj = {}
    for loc in locs:
        adj[loc] = frozenset(
            Location(loc.x + dx * spacing, loc.y + dy * spacing)
            for dx, dy in offsets
            if Location(loc.x + dx * spacing, loc.y + dy * spacing) in locs
        )
    return locs, adj


def build_world(
    *,
    width: int,
    height: int,
    radio_range: int,
    relays: Mapping[str, tuple[int, int]] | None = None,
    home_base: tuple[str, tuple[int, int]] = ("base", (0, 0)),
    uavs: Iterable[str] = (),
    targets: Mapping[str, tuple[int, int]] | None = None,
    spacing: int = 1,
    connectivity: int = 4,
    edges: Iterable[tuple[tuple[int, int], tuple[int, int]]] | None = None,
) -> WorldMap:
    """Convenience constructor for grid worlds.

    When ``edges`` is given it replaces the lattice adjacency entirely.
    """
    locs, adj = grid_adjacency(width, height, spacing, connectivity)
    if edges is not None:
        explicit: dict[Location, set[Location]] = {loc: set() for loc in locs}
        for a, b in edges:
            la, lb = Location(*a), Location(*b)
            if la not in locs or lb not in locs:
                raise WorldError(f"edge {a}-{b} leaves the grid")
            explicit[la].add(lb)
            explicit[lb].add(la)
        adj = {k: frozenset(v) for k, v in explicit.items()}
    base_id, base_loc = home_base
    nodes: dict[str, Node] = {base_id: Node(base_id, NodeKind.HOME_BASE, Location(*base_loc))}
    for rid, rloc in (relays or {}).items():
        if rid in nodes:
            raise WorldError(f"duplicate node id {rid!r}")
        nodes[rid] = Node(rid, NodeKind.RELAY, Location(*rloc))
    for uid in uavs:
        if uid in nodes:
            raise WorldError(f"duplicate node id {uid!r}")
        nodes[uid] = Node(uid, NodeKind.UAV)
    return WorldMap(
        locations=locs,
        adjacency=adj,
        nodes=nodes,
        targets={t: Location(*l) for t, l in (targets or {}).items()},
        radio_range=radio_range,
    )
