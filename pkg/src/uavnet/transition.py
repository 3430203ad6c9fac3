"""World state and the one-step update.

One call to :func:`apply` performs, in order: relay/node breaks, UAV moves,
automatic photography, picture flooding over radio components, delivery
bookkeeping at the home base, and the step increment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Union

from .connectivity import components, link_view
from .world import Location, WorldError, WorldMap, dist2, neighbors

Sharing = Literal["network", "direct"]


class ExecutabilityError(ValueError):
    """An action's preconditions do not hold in the current state."""


@dataclass(frozen=True, order=True)
class Move:
    uav: str
    to: Location

    def __str__(self) -> str:
        return f"move({self.uav},{self.to})"


@dataclass(frozen=True, order=True)
class Wait:
    uav: str

    def __str__(self) -> str:
        return f"wait({self.uav})"


Action = Union[Move, Wait]


@dataclass(frozen=True)
class Break:
    node: str
    step: int
    kind: str = field(default="break", init=False, repr=False)

    def __str__(self) -> str:
        return f"break({self.node},{self.step})"


@dataclass(frozen=True)
class Aborted:
    uav: str
    step: int
    kind: str = field(default="aborted", init=False, repr=False)

    @property
    def node(self) -> str:
        return self.uav

    def __str__(self) -> str:
        return f"aborted({self.uav},{self.step})"


@dataclass(frozen=True)
class Unpredictable:
    uav: str
    step: int
    kind: str = field(default="unpredictable", init=False, repr=False)

    @property
    def node(self) -> str:
        return self.uav

    def __str__(self) -> str:
        return f"unpredictable({self.uav},{self.step})"


ExoEvent = Union[Break, Aborted, Unpredictable]
EVENT_TYPES = {"break": Break, "aborted": Aborted, "unpredictable": Unpredictable}


def event_sort_key(ev: ExoEvent) -> tuple:
    # latest step first within a node: the least disruptive hypothesis wins ties
    order = {"break": 0, "aborted": 1, "unpredictable": 2}
    return (order[ev.kind], ev.node, -ev.step)


@dataclass(frozen=True)
class State:
    step: int
    at: Mapping[str, Location]
    down: frozenset[str]
    # node -> {(target, taken_at)}
    pics: Mapping[str, frozenset[tuple[str, int]]]
    delivered: Mapping[str, int]

    def taken_at(self) -> dict[str, int]:
        first: dict[str, int] = {}
        for held in self.pics.values():
            for t, ts in held:
                if t not in first or ts < first[t]:
                    first[t] = ts
        return first

    def holders(self, target: str) -> frozenset[str]:
        return frozenset(n for n, held in self.pics.items() if any(t == target for t, _ in held))

    def positions(self, world: WorldMap) -> dict[str, Location]:
        pos = {nid: world.nodes[nid].location for nid in world.static_ids}
        pos.update(self.at)
        return pos


def _empty_pics(world: WorldMap) -> dict[str, frozenset]:
    return {n: frozenset() for n in world.node_ids}


def initial_state(world: WorldMap, uav_positions: Mapping[str, Location | tuple[int, int]],
                  down: Iterable[str] = (), sharing: Sharing = "network") -> State:
    """Step-0 state; UAVs starting on a target photograph it immediately."""
    at = {u: Location(*uav_positions[u]) for u in world.uav_ids}
    for u, loc in at.items():
        if loc not in world.locations:
            raise WorldError(f"UAV {u!r} starts off the map at {loc}")
    extra = set(uav_positions) - set(world.uav_ids)
    if extra:
        raise WorldError(f"start positions for unknown UAVs: {sorted(extra)}")
    pics = _empty_pics(world)
    pics, delivered = _photograph_and_share(world, at, frozenset(down), pics, {}, 0, sharing)
    return State(0, at, frozenset(down), pics, delivered)


def executable(state: State, action: Action, world: WorldMap) -> bool:
    if action.uav not in state.at:
        raise WorldError(f"unknown UAV {action.uav!r}")
    if action.uav in state.down:
        return False
    if isinstance(action, Wait):
        return True
    return action.to in neighbors(world, state.at[action.uav])


def _photograph_and_share(world, at, down, pics, delivered, step, sharing):
    pics = dict(pics)
    first = {}
    for held in pics.values():
        for t, ts in held:
            if t not in first or ts < first[t]:
                first[t] = ts
    for u, loc in at.items():
        for t in world.target_at(loc):
            if t not in first:
                first[t] = step
            if not any(tt == t for tt, _ in pics[u]):
                pics[u] = pics[u] | {(t, first[t])}

    positions = {nid: world.nodes[nid].location for nid in world.static_ids}
    positions.update(at)
    base = world.home_base
    if sharing == "network":
        view = link_view(positions, down, world.radio_range)
        for comp in components(view):
            if len(comp) < 2:
                continue
            union = frozenset().union(*(pics[n] for n in comp))
            for n in comp:
                pics[n] = union
    elif sharing == "direct":
        if base not in down:
            r2 = world.range2
            gathered = pics[base]
            for u in world.uav_ids:
                if u not in down and dist2(at[u], positions[base]) <= r2:
                    gathered = gathered | pics[u]
            pics[base] = gathered
    else:
        raise ValueError(f"unknown sharing model {sharing!r}")

    delivered = dict(delivered)
    for t, _ in pics[base]:
        delivered.setdefault(t, step)
    return pics, delivered


def apply(state: State, joint: Mapping[str, Action], exo: Iterable[ExoEvent], world: WorldMap,
          sharing: Sharing = "network") -> State:
    """Advance ``state`` by one step.

    Only ``Break`` events change the world directly; aborted/unpredictable
    events describe agent behaviour and are ignored here.
    """
    for u, act in joint.items():
        if act.uav != u:
            raise WorldError(f"action {act} filed under UAV {u!r}")
        if not executable(state, act, world):
            raise ExecutabilityError(f"{act} not executable at step {state.step}")
    down = set(state.down)
    for ev in exo:
        if ev.step != state.step:
            raise WorldError(f"event {ev} injected at step {state.step}")
        if isinstance(ev, Break):
            if ev.node not in world.nodes:
                raise WorldError(f"unknown node {ev.node!r}")
            down.add(ev.node)
    at = dict(state.at)
    for u, act in joint.items():
        if isinstance(act, Move):
            at[u] = act.to
    nxt = state.step + 1
    pics, delivered = _photograph_and_share(world, at, frozenset(down), state.pics, state.delivered, nxt, sharing)
    return State(nxt, at, frozenset(down), pics, delivered)


def total_staleness(state: State) -> int:
    taken = state.taken_at()
    return sum(d - taken[t] for t, d in state.delivered.items())
