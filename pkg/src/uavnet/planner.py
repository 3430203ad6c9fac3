"""Optimal mission planning, single-agent replanning and the network-unaware baseline.

Plans minimise (mission_length, total_staleness) lexicographically.  The
search is A* over (step, UAV cells, per-target picture status) with integer
bitmasks for picture holders; staleness is accrued per transition as the
number of pictures taken but not yet delivered.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .connectivity import components, link_view
from .transition import (
    Aborted, Action, Break, ExoEvent, Move, Sharing, State, Unpredictable, Wait,
    apply, executable,
)
from .world import Location, WorldMap, dist2

DEFAULT_MAX_HORIZON = 40


class PlanningError(RuntimeError):
    def __init__(self, message: str, horizon: int):
        super().__init__(f"{message} (max horizon {horizon})")
        self.horizon = horizon


@dataclass(frozen=True)
class Goal:
    targets: frozenset[str]

    def __post_init__(self) -> None:
        if not self.targets:
            raise ValueError("goal needs at least one target")

    @classmethod
    def all_targets(cls, world: WorldMap) -> "Goal":
        return cls(frozenset(world.targets))


@dataclass(frozen=True)
class Metrics:
    mission_length: int
    total_staleness: int
    delivered_count: int

    def as_tuple(self) -> tuple[int, int]:
        return (self.mission_length, self.total_staleness)


@dataclass(frozen=True)
class Plan:
    """Per-UAV timed actions; ``actions[u][k]`` happens at step ``start + k``."""

    horizon: int
    actions: Mapping[str, tuple[Action, ...]]
    start: int = 0

    def __post_init__(self) -> None:
        for u, acts in self.actions.items():
            if len(acts) != self.horizon:
                raise ValueError(f"plan for {u} has {len(acts)} actions, horizon is {self.horizon}")

    @property
    def end(self) -> int:
        return self.start + self.horizon

    def action_at(self, uav: str, step: int) -> Action | None:
        """The planned action, or None outside the plan window."""
        k = step - self.start
        acts = self.actions.get(uav)
        if acts is None or not 0 <= k < self.horizon:
            return None
        return acts[k]

    def tail(self, step: int) -> "Plan":
        k = max(0, min(self.horizon, step - self.start))
        return Plan(self.horizon - k, {u: a[k:] for u, a in self.actions.items()}, self.start + k)

    def slice(self, uav: str) -> "Plan":
        return Plan(self.horizon, {uav: self.actions[uav]}, self.start)

    def trajectory(self, uav: str, start_loc: Location) -> list[Location]:
        locs = [start_loc]
        for a in self.actions[uav]:
            locs.append(a.to if isinstance(a, Move) else locs[-1])
        return locs

    def describe(self) -> str:
        lines = []
        for u in sorted(self.actions):
            steps = " ".join(f"{self.start + k}:{_short(a)}" for k, a in enumerate(self.actions[u]))
            lines.append(f"{u}: {steps}")
        return "\n".join(lines)


def _short(a: Action) -> str:
    return f"->{a.to.x},{a.to.y}" if isinstance(a, Move) else "wait"


# ---------------------------------------------------------------------------
# search model

DELIVERED = -1
_EPS = 1e-9


class _Model:
    """Compiled, bitmask form of a world for one planning call."""

    def __init__(self, world: WorldMap, down: frozenset[str], sharing: Sharing,
                 targets: Sequence[str], seed: int):
        self.world = world
        self.sharing = sharing
        self.cells: list[Location] = sorted(world.locations)
        self.cell_idx = {c: i for i, c in enumerate(self.cells)}
        rng = random.Random(seed)
        order_key = [rng.random() for _ in self.cells]
        self.nbrs: list[list[int]] = [
            sorted((self.cell_idx[n] for n in world.adjacency.get(c, ())), key=lambda j: order_key[j])
            for c in self.cells
        ]
        self.bit = {nid: 1 << i for i, nid in enumerate(world.node_ids)}
        self.uavs = list(world.uav_ids)
        self.uav_bits = [self.bit[u] for u in self.uavs]
        self.uav_up = [u not in down for u in self.uavs]
        self.targets = list(targets)
        self.target_cell = [self.cell_idx[world.targets[t]] for t in self.targets]
        self.targets_at: dict[int, list[int]] = {}
        for j, c in enumerate(self.target_cell):
            self.targets_at.setdefault(c, []).append(j)
        base = world.home_base
        self.base_bit = self.bit[base]
        self.base_up = base not in down
        r2 = world.range2
        self.r2 = r2

        static_pos = {s: world.nodes[s].location for s in world.static_ids}
        up_static = [s for s in world.static_ids if s not in down]
        view = link_view({s: static_pos[s] for s in up_static}, (), world.radio_range)
        self.static_comps = [sum(self.bit[n] for n in comp) for comp in components(view)]
        static_comp_of = {}
        for k, comp in enumerate(components(view)):
            for n in comp:
                static_comp_of[n] = k
        # static components within range of each cell
        self.cell_static: list[tuple[int, ...]] = []
        for c in self.cells:
            ks = sorted({static_comp_of[s] for s in up_static if dist2(c, static_pos[s]) <= r2})
            self.cell_static.append(tuple(ks))
        self._link: dict[tuple[int, int], bool] = {}
        self._comp_cache: dict[tuple[int, ...], tuple[int, ...]] = {}

        # --- admissible bounds ---
        self.hops_to_target = [self._bfs([c]) for c in self.target_cell]
        self.n_up_uavs = sum(self.uav_up)
        rho = world.radio_range
        if sharing == "direct":
            zone = [i for i, c in enumerate(self.cells) if dist2(c, static_pos[base]) <= r2]
            self.deliver_hops = self._bfs(zone) if self.base_up else None
            self.phi = None
        else:
            base_comp = next((m for m in self.static_comps if m & self.base_bit), 0)
            single = self.base_up and all(m == base_comp for m in self.static_comps)
            if single:
                anchors = [static_pos[s] for s in up_static]
                self.phi = [min(math.sqrt(dist2(c, a)) for a in anchors) for c in self.cells]
                edge = max((math.sqrt(dist2(c, n)) for c in self.cells
                            for n in world.adjacency.get(c, ())), default=1.0)
                self.edge = edge
            else:
                self.phi = None
            self.deliver_hops = None
        self.rho = rho

    def _bfs(self, sources: Iterable[int]) -> list[float]:
        dist = [math.inf] * len(self.cells)
        q = deque()
        for s in sources:
            dist[s] = 0
            q.append(s)
        while q:
            c = q.popleft()
            for n in self.nbrs[c]:
                if dist[n] == math.inf:
                    dist[n] = dist[c] + 1
                    q.append(n)
        return dist

    def linked(self, a: int, b: int) -> bool:
        key = (a, b) if a <= b else (b, a)
        v = self._link.get(key)
        if v is None:
            v = dist2(self.cells[a], self.cells[b]) <= self.r2
            self._link[key] = v
        return v

    def comps(self, pos: tuple[int, ...]) -> tuple[int, ...]:
        """Component masks (radio sharing groups) for a UAV placement."""
        cached = self._comp_cache.get(pos)
        if cached is not None:
            return cached
        if self.sharing == "direct":
            if not self.base_up:
                res: tuple[int, ...] = ()
            else:
                base_cell = self.cell_idx[self.world.nodes[self.world.home_base].location]
                m = self.base_bit
                for i, c in enumerate(pos):
                    if self.uav_up[i] and self.linked(c, base_cell):
                        m |= self.uav_bits[i]
                res = (m,)
        else:
            n_static = len(self.static_comps)
            parent = list(range(n_static + len(pos)))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for i, c in enumerate(pos):
                if not self.uav_up[i]:
                    continue
                for k in self.cell_static[c]:
                    parent[find(n_static + i)] = find(k)
                for j in range(i):
                    if self.uav_up[j] and self.linked(c, pos[j]):
                        parent[find(n_static + i)] = find(n_static + j)
            masks: dict[int, int] = {}
            for k, m in enumerate(self.static_comps):
                r = find(k)
                masks[r] = masks.get(r, 0) | m
            for i in range(len(pos)):
                if self.uav_up[i]:
                    r = find(n_static + i)
                    masks[r] = masks.get(r, 0) | self.uav_bits[i]
            res = tuple(masks.values())
        self._comp_cache[pos] = res
        return res

    def settle(self, pos: tuple[int, ...], status: tuple[int, ...]) -> tuple[int, ...]:
        """Photograph targets under UAVs, flood pictures, mark deliveries."""
        st = list(status)
        for i, c in enumerate(pos):
            js = self.targets_at.get(c)
            if js:
                for j in js:
                    if st[j] != DELIVERED:
                        st[j] |= self.uav_bits[i]
        comps = self.comps(pos)
        for j, m in enumerate(st):
            if m > 0:
                acc = m
                for cm in comps:
                    if cm & m:
                        acc |= cm
                st[j] = DELIVERED if (acc & self.base_bit and self.base_up) else acc
        return tuple(st)

    def lower_bounds(self, pos: tuple[int, ...], status: tuple[int, ...]) -> tuple[float, float]:
        """Admissible (remaining steps, remaining staleness)."""
        h_len = 0.0
        h_stale = 0.0
        up_cells = [c for i, c in enumerate(pos) if self.uav_up[i]]
        if not self.base_up and any(m != DELIVERED for m in status):
            return math.inf, math.inf
        for j, m in enumerate(status):
            if m == DELIVERED:
                continue
            if m == 0:
                hops = self.hops_to_target[j]
                reach = min((hops[c] for c in up_cells), default=math.inf)
                lb = reach + self._deliver_from_target(j)
            else:
                holders = [pos[i] for i in range(len(pos)) if self.uav_up[i] and m & self.uav_bits[i]]
                if not holders:
                    return math.inf, math.inf
                lb = self._deliver_from_holders(holders)
                h_stale += max(1.0, lb)
            if lb > h_len:
                h_len = lb
        return h_len, h_stale

    def _deliver_from_target(self, j: int) -> float:
        c = self.target_cell[j]
        if self.sharing == "direct":
            return self.deliver_hops[c]
        if self.phi is None:
            return 0.0
        need = self.phi[c] - self.n_up_uavs * self.rho
        return max(0.0, math.ceil(need / self.edge - _EPS))

    def _deliver_from_holders(self, cells: list[int]) -> float:
        if self.sharing == "direct":
            return min(self.deliver_hops[c] for c in cells)
        if self.phi is None:
            return 0.0
        need = min(self.phi[c] for c in cells) - self.rho - (self.n_up_uavs - len(cells)) * self.rho
        return max(0.0, math.ceil(need / self.edge - _EPS))


def _search(model: _Model, start_step: int, start_pos: tuple[int, ...], start_status: tuple[int, ...],
            free: Sequence[int], fixed_traj: Mapping[int, Callable[[int], int]], max_horizon: int,
            ) -> tuple[int, list[tuple[int, ...]]]:
    """A* on (length, staleness). Returns (staleness, cell placements per step)."""
    status0 = model.settle(start_pos, start_status)
    # the caller's status is already settled; settle is idempotent
    h_len, h_stale = model.lower_bounds(start_pos, status0)
    if start_step + h_len > max_horizon:
        raise PlanningError("goal unreachable", max_horizon)
    counter = itertools.count()
    start_key = (start_step, start_pos, status0)
    best: dict[tuple, int] = {start_key: 0}
    parent: dict[tuple, tuple | None] = {start_key: None}
    heap = [(start_step + h_len, h_stale, -start_step, next(counter), 0, start_key)]
    n_uav = len(start_pos)
    while heap:
        _, _, _, _, g, key = heapq.heappop(heap)
        if best.get(key, math.inf) < g:
            continue
        t, pos, status = key
        if all(m == DELIVERED for m in status):
            path = []
            k = key
            while k is not None:
                path.append(k[1])
                k = parent[k]
            path.reverse()
            return g, path
        if t >= max_horizon:
            continue
        step_cost = sum(1 for m in status if m > 0)
        options = []
        for i in range(n_uav):
            if i in fixed_traj:
                options.append((fixed_traj[i](t + 1),))
            elif i in free and model.uav_up[i]:
                options.append((pos[i], *model.nbrs[pos[i]]))
            else:
                options.append((pos[i],))
        g2 = g + step_cost
        for npos in itertools.product(*options):
            nstatus = model.settle(npos, status)
            nkey = (t + 1, npos, nstatus)
            if best.get(nkey, math.inf) <= g2:
                continue
            hl, hs = model.lower_bounds(npos, nstatus)
            if t + 1 + hl > max_horizon:
                continue
            best[nkey] = g2
            parent[nkey] = key
            heapq.heappush(heap, (t + 1 + hl, g2 + hs, -(t + 1), next(counter), g2, nkey))
    raise PlanningError("goal unreachable", max_horizon)


def _status_from_state(model: _Model, state: State) -> tuple[int, ...]:
    st = []
    for t in model.targets:
        if t in state.delivered:
            st.append(DELIVERED)
        else:
            m = 0
            for n, held in state.pics.items():
                if any(tt == t for tt, _ in held):
                    m |= model.bit[n]
            st.append(m)
    return tuple(st)


def _path_to_plan(model: _Model, path: list[tuple[int, ...]], start: int, uavs: Iterable[str]) -> Plan:
    acts: dict[str, list[Action]] = {u: [] for u in uavs}
    for a, b in zip(path, path[1:]):
        for i, u in enumerate(model.uavs):
            if u not in acts:
                continue
            acts[u].append(Wait(u) if a[i] == b[i] else Move(u, model.cells[b[i]]))
    return Plan(len(path) - 1, {u: tuple(v) for u, v in acts.items()}, start)


def _plan(world: WorldMap, init: State, goal: Goal, sharing: Sharing, max_horizon: int, seed: int,
          free_uavs: Sequence[str], fixed: Mapping[str, Callable[[int], Location]] | None = None) -> Plan:
    missing = [t for t in goal.targets if t not in world.targets]
    if missing:
        raise ValueError(f"goal mentions unknown targets {missing}")
    targets = sorted(t for t in goal.targets if t not in init.delivered)
    model = _Model(world, init.down, sharing, targets, seed)
    pos = tuple(model.cell_idx[init.at[u]] for u in model.uavs)
    status = _status_from_state(model, init)
    free = [model.uavs.index(u) for u in free_uavs]
    fixed_idx = {}
    for u, fn in (fixed or {}).items():
        fixed_idx[model.uavs.index(u)] = (lambda f: (lambda t: model.cell_idx[f(t)]))(fn)
    _, path = _search(model, init.step, pos, status, free, fixed_idx, max_horizon)
    return _path_to_plan(model, path, init.step, world.uav_ids)


def plan_mission(world: WorldMap, init: State, goal: Goal, *, max_horizon: int = DEFAULT_MAX_HORIZON,
                 seed: int = 0) -> Plan:
    return _plan(world, init, goal, "network", max_horizon, seed, world.uav_ids)


def plan_network_unaware(world: WorldMap, init: State, goal: Goal, *, max_horizon: int = DEFAULT_MAX_HORIZON,
                         seed: int = 0) -> Plan:
    """Baseline that only counts a picture as delivered when its carrier is
    within direct radio range of the home base."""
    return _plan(world, init, goal, "direct", max_horizon, seed, world.uav_ids)


def behavior_trajectory(world: WorldMap, mission: Plan, uav: str, loc: Location, step: int,
                        aborted_at: int | None, until: int, down: frozenset[str] = frozenset()
                        ) -> list[Location]:
    """Positions of ``uav`` at steps ``step..until`` under the default behaviour
    model: follow the mission plan, skip inapplicable moves, stop once aborted."""
    locs = [loc]
    for s in range(step, until):
        a = None if (aborted_at is not None and s >= aborted_at) else mission.action_at(uav, s)
        if isinstance(a, Move) and uav not in down and a.to in world.adjacency.get(loc, ()):
            loc = a.to
        locs.append(loc)
    return locs


def replan(world: WorldMap, belief_init: State, mission: Plan, expl, goal: Goal, self_id: str, *,
           max_horizon: int = DEFAULT_MAX_HORIZON, seed: int = 0, sharing: Sharing = "network") -> Plan:
    """Optimise ``self_id``'s actions while every other UAV follows its
    behaviour model (mission plan, frozen if believed aborted)."""
    frozen_from: dict[str, int] = {}
    if expl is not None:
        for ev in expl.events:
            if isinstance(ev, Aborted):
                frozen_from[ev.uav] = min(frozen_from.get(ev.uav, ev.step), ev.step)
            elif isinstance(ev, Unpredictable):
                # no model of where an unpredictable UAV goes next: assume it holds position
                frozen_from[ev.uav] = belief_init.step
    fixed = {}
    for u in world.uav_ids:
        if u == self_id:
            continue
        traj = behavior_trajectory(world, mission, u, belief_init.at[u], belief_init.step,
                                   frozen_from.get(u), max_horizon + 1, belief_init.down)
        fixed[u] = (lambda tr, s0: (lambda t: tr[min(t - s0, len(tr) - 1)]))(traj, belief_init.step)
    return _plan(world, belief_init, goal, sharing, max_horizon, seed, [self_id], fixed)


def evaluate(world: WorldMap, init: State, plan: Plan, exo_script: Iterable[ExoEvent] = (), *,
             goal: Goal | None = None, sharing: Sharing = "network") -> Metrics:
    """Open-loop execution of ``plan``; inexecutable actions become waits."""
    goal_targets = goal.targets if goal is not None else frozenset(world.targets)
    exo = list(exo_script)
    aborted = {ev.uav: ev.step for ev in exo if isinstance(ev, (Aborted, Unpredictable))}
    state = init
    done_at = init.step if goal_targets <= set(state.delivered) else None
    for step in range(plan.start, plan.end):
        joint = {}
        for u in world.uav_ids:
            a = plan.action_at(u, step)
            if a is None or (u in aborted and step >= aborted[u]) or not executable(state, a, world):
                a = Wait(u)
            joint[u] = a
        events = [ev for ev in exo if isinstance(ev, Break) and ev.step == step]
        state = apply(state, joint, events, world, sharing)
        if done_at is None and goal_targets <= set(state.delivered):
            done_at = state.step
    length = done_at if done_at is not None else plan.end
    return Metrics(length, staleness_of(state, goal_targets), sum(1 for t in goal_targets if t in state.delivered))


def staleness_of(state: State, targets: Iterable[str] | None = None) -> int:
    taken = state.taken_at()
    wanted = set(targets) if targets is not None else set(state.delivered)
    return sum(d - taken[t] for t, d in state.delivered.items() if t in wanted)
