"""Radio reachability: direct links within range and their transitive closure.

``in_contact`` is a defined fluent, so everything here is recomputed from the
positions and the down set on every call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .world import Location, WorldError, dist2


@dataclass(frozen=True)
class LinkView:
    up_nodes: frozenset[str]
    positions: Mapping[str, Location]
    range: int

    def __post_init__(self) -> None:
        missing = [n for n in self.up_nodes if n not in self.positions]
        if missing:
            raise WorldError(f"up nodes without a position: {sorted(missing)}")


def link_view(positions: Mapping[str, Location], down: Iterable[str], radio_range: int) -> LinkView:
    down = set(down)
    return LinkView(frozenset(n for n in positions if n not in down), dict(positions), radio_range)


def direct_link(view: LinkView, a: str, b: str) -> bool:
    if a == b:
        raise WorldError("direct_link is irreflexive")
    if a not in view.up_nodes or b not in view.up_nodes:
        return False
    return dist2(view.positions[a], view.positions[b]) <= view.range * view.range


def components(view: LinkView) -> list[frozenset[str]]:
    """Connected components of the direct-link graph over up nodes."""
    r2 = view.range * view.range
    nodes = sorted(view.up_nodes)
    parent = {n: n for n in nodes}

    def find(n: str) -> str:
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    for i, a in enumerate(nodes):
        pa = view.positions[a]
        for b in nodes[i + 1:]:
            if dist2(pa, view.positions[b]) <= r2:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra
    groups: dict[str, set[str]] = {}
    for n in nodes:
        groups.setdefault(find(n), set()).add(n)
    return sorted((frozenset(g) for g in groups.values()), key=lambda g: min(g))


def reachable_set(view: LinkView, a: str) -> frozenset[str]:
    if a not in view.up_nodes:
        return frozenset()
    r2 = view.range * view.range
    seen = {a}
    stack = [a]
    while stack:
        cur = stack.pop()
        pc = view.positions[cur]
        for n in view.up_nodes:
            if n not in seen and dist2(pc, view.positions[n]) <= r2:
                seen.add(n)
                stack.append(n)
    seen.discard(a)
    return frozenset(seen)


def in_contact(view: LinkView, a: str, b: str) -> bool:
    if a == b:
        raise WorldError("in_contact is irreflexive")
    if a not in view.up_nodes or b not in view.up_nodes:
        return False
    return b in reachable_set(view, a)
