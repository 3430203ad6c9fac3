"""Agent-local histories, expectations and cardinality-minimal diagnosis.

An agent knows the world layout, the initial state, the mission plan and its
own actions. Everything else is inferred from observations. Other UAVs are
expected to follow the mission plan; when observations disagree with that
expectation, :func:`explain` searches for the fewest exogenous events
(breaks, aborts, unpredictable behaviour) that make them agree again.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .connectivity import components, link_view
from .planner import Plan
from .transition import (
    Aborted, Action, Break, ExoEvent, Move, Sharing, State, Unpredictable, Wait,
    apply, event_sort_key, executable,
)
from .world import Location, WorldMap, dist2

DEFAULT_MAX_CARDINALITY = 6

# mode of another UAV as seen by the reasoner
_PLAN, _ABORTED, _FREE = 0, 1, 2


class DiagnosisError(RuntimeError):
    """No explanation within the event vocabulary fits the history."""


@dataclass(frozen=True)
class Obs:
    """``fluent`` is ("in_contact", a, b), ("near", a, b) or ("at", uav, loc)."""

    fluent: tuple
    value: bool
    step: int

    def __str__(self) -> str:
        name, *args = self.fluent
        neg = "" if self.value else "-"
        return f"obs({neg}{name}({','.join(str(a) for a in args)}),{self.step})"


@dataclass(frozen=True)
class Hpd:
    action: Action
    step: int

    def __str__(self) -> str:
        return f"hpd({self.action},{self.step})"


@dataclass(frozen=True)
class History:
    owner: str
    entries: tuple = ()
    currstep: int = 0

    def __post_init__(self) -> None:
        last = -1
        for e in self.entries:
            if e.step < last:
                raise ValueError("history entries must be sorted by step")
            last = e.step
            if isinstance(e, Hpd) and e.action.uav != self.owner:
                raise ValueError(f"hpd of {e.action} recorded in {self.owner}'s history")
        if last > self.currstep:
            raise ValueError("currstep precedes the last entry")

    def observe(self, obs: Iterable[Obs], step: int) -> "History":
        obs = sorted(obs, key=lambda o: repr(o.fluent))
        if any(o.step != step for o in obs):
            raise ValueError("observations must carry the step they are made at")
        return History(self.owner, self.entries + tuple(obs), max(self.currstep, step))

    def record(self, action: Action, step: int) -> "History":
        return History(self.owner, self.entries + (Hpd(action, step),), max(self.currstep, step))

    @property
    def observations(self) -> list[Obs]:
        return [e for e in self.entries if isinstance(e, Obs)]

    @property
    def own_actions(self) -> dict[int, Action]:
        return {e.step: e.action for e in self.entries if isinstance(e, Hpd)}


@dataclass(frozen=True)
class Explanation:
    events: frozenset = frozenset()
    # uav -> ((loc, step), ...): position at each step after it turned unpredictable
    hypo_moves: Mapping[str, tuple[tuple[Location, int], ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        aborted = {e.uav: e.step for e in self.events if isinstance(e, Aborted)}
        for e in self.events:
            if isinstance(e, Unpredictable) and not (e.uav in aborted and aborted[e.uav] <= e.step):
                raise ValueError(f"{e} without an earlier aborted event")
        unpred = {e.uav for e in self.events if isinstance(e, Unpredictable)}
        extra = set(self.hypo_moves) - unpred
        if extra:
            raise ValueError(f"hypothesised moves for predictable UAVs {sorted(extra)}")

    @property
    def cardinality(self) -> int:
        return len(self.events)

    @property
    def n_unpredictable(self) -> int:
        return sum(1 for e in self.events if isinstance(e, Unpredictable))

    def sorted_events(self) -> list[ExoEvent]:
        return sorted(self.events, key=event_sort_key)

    def aborted_at(self, uav: str) -> int | None:
        steps = [e.step for e in self.events if isinstance(e, Aborted) and e.uav == uav]
        return min(steps) if steps else None

    def unpredictable_at(self, uav: str) -> int | None:
        steps = [e.step for e in self.events if isinstance(e, Unpredictable) and e.uav == uav]
        return min(steps) if steps else None

    def __str__(self) -> str:
        return "{" + ", ".join(str(e) for e in self.sorted_events()) + "}"


EMPTY = Explanation()


# ---------------------------------------------------------------------------
# fluents and projection

def fluent_holds(world: WorldMap, state: State, fluent: tuple) -> bool:
    name = fluent[0]
    if name == "at":
        return state.at.get(fluent[1]) == fluent[2]
    if name == "near":
        a, b = fluent[1], fluent[2]
        if a in state.down or b in state.down:
            return False
        pos = state.positions(world)
        return dist2(pos[a], pos[b]) <= world.range2
    if name == "in_contact":
        a, b = fluent[1], fluent[2]
        if a in state.down or b in state.down:
            return False
        view = link_view(state.positions(world), state.down, world.radio_range)
        return any(a in c and b in c for c in components(view))
    raise ValueError(f"unknown fluent {name!r}")


def _other_action(world: WorldMap, state: State, mission: Plan, expl: Explanation, uav: str,
                  step: int) -> Action:
    ua = expl.unpredictable_at(uav)
    if ua is not None and step >= ua:
        path = dict((s, loc) for loc, s in expl.hypo_moves.get(uav, ()))
        nxt = path.get(step + 1, state.at[uav])
        return Wait(uav) if nxt == state.at[uav] else Move(uav, nxt)
    ab = expl.aborted_at(uav)
    if ab is not None and step >= ab:
        return Wait(uav)
    a = mission.action_at(uav, step)
    if a is None or not executable(state, a, world):
        return Wait(uav)
    return a


def project(world: WorldMap, init: State, mission: Plan, own_hpd: Mapping[int, Action] | Sequence[Hpd],
            expl: Explanation, upto: int, owner: str, sharing: Sharing = "network") -> list[State]:
    """States ``init.step .. upto`` under the behaviour model and ``expl``."""
    if not isinstance(own_hpd, Mapping):
        own_hpd = {h.step: h.action for h in own_hpd}
    breaks: dict[int, list[Break]] = {}
    for e in expl.events:
        if isinstance(e, Break):
            breaks.setdefault(e.step, []).append(e)
    states = [init]
    state = init
    for s in range(init.step, upto):
        joint = {}
        for u in world.uav_ids:
            if u == owner:
                joint[u] = own_hpd.get(s, Wait(u))
            else:
                joint[u] = _other_action(world, state, mission, expl, u, s)
        try:
            state = apply(state, joint, sorted(breaks.get(s, ()), key=event_sort_key), world, sharing)
        except ValueError as exc:
            raise ValueError(f"explanation {expl} is inconsistent at step {s}: {exc}") from exc
        states.append(state)
    return states


def contradictions(history: History, trajectory: Sequence[State], world: WorldMap) -> list[Obs]:
    """Observations the trajectory disagrees with (the reality check)."""
    base = trajectory[0].step
    bad = []
    for o in history.observations:
        k = o.step - base
        if not 0 <= k < len(trajectory):
            raise ValueError(f"trajectory does not cover observation step {o.step}")
        if fluent_holds(world, trajectory[k], o.fluent) != o.value:
            bad.append(o)
    return bad


def unexpected(history: History, trajectory: Sequence[State], world: WorldMap) -> bool:
    return bool(contradictions(history, trajectory, world))


# ---------------------------------------------------------------------------
# diagnosis

class _Diag:
    """Search context: only positions and the down set matter for the
    observation vocabulary, so pictures are left out of the search state."""

    def __init__(self, world: WorldMap, init: State, mission: Plan, history: History):
        self.world = world
        self.owner = history.owner
        self.others = [u for u in world.uav_ids if u != self.owner]
        self.static = [n for n in world.static_ids if n not in init.down]
        self.r2 = world.range2
        self.start = init.step
        self.end = history.currstep
        self.obs: dict[int, list[Obs]] = {}
        for o in history.observations:
            self.obs.setdefault(o.step, []).append(o)
        acts = history.own_actions
        own = [init.at[self.owner]]
        for s in range(self.start, self.end):
            a = acts.get(s)
            own.append(a.to if isinstance(a, Move) else own[-1])
        self.own = own
        self.mission = mission
        self.init = init
        self.static_pos = {n: world.nodes[n].location for n in world.static_ids}
        self._mission_pos: dict[str, list[Location]] = {}
        for u in self.others:
            locs = [init.at[u]]
            for s in range(self.start, self.end):
                a = mission.action_at(u, s)
                loc = locs[-1]
                if isinstance(a, Move) and a.to in world.adjacency.get(loc, ()):
                    loc = a.to
                locs.append(loc)
            self._mission_pos[u] = locs

    def plan_pos(self, u: str, s: int) -> Location:
        return self._mission_pos[u][s - self.start]

    def positions(self, s: int, others: tuple) -> dict[str, Location]:
        pos = dict(self.static_pos)
        pos[self.owner] = self.own[s - self.start]
        for u, (_, loc) in zip(self.others, others):
            pos[u] = loc
        return pos

    def consistent(self, s: int, down: frozenset, pos: Mapping[str, Location]) -> bool:
        obs = self.obs.get(s)
        if not obs:
            return True
        comp = None
        for o in obs:
            name, a, b = o.fluent
            if name == "at":
                val = pos.get(a) == b
            elif name == "near":
                val = a not in down and b not in down and dist2(pos[a], pos[b]) <= self.r2
            else:
                if comp is None:
                    view = link_view(pos, down, self.world.radio_range)
                    comp = {n: i for i, c in enumerate(components(view)) for n in c}
                val = a in comp and b in comp and comp[a] == comp[b]
            if val != o.value:
                return False
        return True

    def break_options(self, s: int, down: frozenset, pos: Mapping[str, Location], budget: int,
                      forced: frozenset) -> list[frozenset]:
        """Inclusion-minimal sets of new breaks (taking effect at ``s``) that
        make the observations at ``s`` hold."""
        down = down | forced
        obs = self.obs.get(s, ())
        must_up = set()
        must_down = set()
        me = self.owner
        for o in obs:
            if o.fluent[0] == "in_contact" and o.fluent[1] == me:
                other = o.fluent[2]
                if o.value:
                    must_up.add(other)
                elif other in self.static_pos and dist2(pos[me], pos[other]) <= self.r2:
                    # in direct range yet unreachable: it must be down
                    must_down.add(other)
        must_down -= down
        if must_down & must_up or len(must_down) > budget:
            return []
        base = down | must_down
        if self.consistent(s, base, pos):
            return [frozenset(must_down) | forced]
        cands = [n for n in self.static if n not in base and n not in must_up]
        found: list[frozenset] = []
        for k in range(1, budget - len(must_down) + 1):
            for extra in itertools.combinations(cands, k):
                ex = frozenset(extra)
                if any(f <= ex for f in found):
                    continue
                if self.consistent(s, base | ex, pos):
                    found.append(ex)
        return [frozenset(must_down) | f | forced for f in found]


def _prior_index(prior: Explanation | None):
    breaks: dict[int, set[str]] = {}
    modes: dict[str, dict[int, int]] = {}
    if prior is None:
        return breaks, modes
    for e in prior.events:
        if isinstance(e, Break):
            breaks.setdefault(e.step, set()).add(e.node)
        elif isinstance(e, Aborted):
            modes.setdefault(e.uav, {})[e.step] = max(modes.get(e.uav, {}).get(e.step, 0), _ABORTED)
        elif isinstance(e, Unpredictable):
            modes.setdefault(e.uav, {})[e.step] = _FREE
    return breaks, modes


def _mode_options(u: str, mode: int, s: int, forced: Mapping[int, int]) -> list[tuple[int, tuple, int]]:
    """(new mode, new events, new unpredictable count) for ``u`` at step ``s``.

    Prior events pin their mode changes; before the last pinned step no
    other change is allowed, afterwards the UAV may only escalate.
    """
    f = forced.get(s)
    if f is not None:
        if f == _FREE:
            return [(_FREE, (), 0)]
        if mode == _FREE or s < max(forced):
            return [(max(mode, _ABORTED), (), 0)]
        return [(_ABORTED, (), 0), (_FREE, (Unpredictable(u, s),), 1)]
    if forced and s < max(forced):
        return [(mode, (), 0)]
    opts = [(mode, (), 0)]
    if mode == _PLAN:
        opts.append((_ABORTED, (Aborted(u, s),), 0))
        opts.append((_FREE, (Aborted(u, s), Unpredictable(u, s)), 1))
    elif mode == _ABORTED:
        opts.append((_FREE, (Unpredictable(u, s),), 1))
    return opts


def _search(ctx: _Diag, prior: Explanation | None, max_card: int) -> Explanation | None:
    world = ctx.world
    pbreaks, pmodes = _prior_index(prior)
    n_prior = prior.cardinality if prior is not None else 0
    if n_prior > max_card:
        return None
    init_others = tuple((_PLAN, ctx.init.at[u]) for u in ctx.others)
    s0 = ctx.start
    down0 = frozenset(ctx.init.down)
    # prior modes that start at step 0 apply before the first transition only
    if not ctx.consistent(s0, down0, ctx.positions(s0, init_others)):
        return None
    counter = itertools.count()
    start = (s0, down0, init_others)
    parent: dict[tuple, tuple | None] = {start: None}
    events_of: dict[tuple, tuple] = {start: ()}
    u_prior = prior.n_unpredictable if prior is not None else 0
    cost_of = {start: (n_prior, u_prior)}
    heap = [(n_prior, u_prior, -s0, next(counter), start)]
    seen = set()
    while heap:
        card, n_unp, _, _, key = heapq.heappop(heap)
        if key in seen:
            continue
        seen.add(key)
        s, down, others = key
        if s == ctx.end:
            return _reconstruct(ctx, key, parent, events_of, prior)
        # per-UAV transitions: (new mode, next pos, added events, added cost, added unpredictable)
        per_uav = []
        for u, (mode, loc) in zip(ctx.others, others):
            opts = []
            for m, evs, add_unp in _mode_options(u, mode, s, pmodes.get(u, {})):
                if m == _PLAN:
                    nexts = [ctx.plan_pos(u, s + 1)]
                elif m == _ABORTED:
                    nexts = [loc]
                else:
                    nexts = [loc] + sorted(world.adjacency.get(loc, ()))
                for nl in nexts:
                    opts.append((m, nl, evs, len(evs), add_unp))
            per_uav.append(opts)
        forced_breaks = frozenset(pbreaks.get(s, ())) - down
        for combo in itertools.product(*per_uav):
            add = sum(c[3] for c in combo)
            unp = sum(c[4] for c in combo)
            if card + add > max_card:
                continue
            nothers = tuple((c[0], c[1]) for c in combo)
            pos = ctx.positions(s + 1, nothers)
            for extra in ctx.break_options(s + 1, down, pos, max_card - card - add, forced_breaks):
                new = extra - forced_breaks
                nkey = (s + 1, down | extra, nothers)
                if nkey in seen:
                    continue
                ncost = (card + add + len(new), n_unp + unp)
                if ncost >= cost_of.get(nkey, (max_card + 1, 0)):
                    continue
                cost_of[nkey] = ncost
                parent[nkey] = key
                evs = tuple(e for c in combo for e in c[2]) + tuple(Break(n, s) for n in sorted(new))
                events_of[nkey] = evs
                heapq.heappush(heap, (ncost[0], ncost[1], -(s + 1), next(counter), nkey))
    return None


def _reconstruct(ctx: _Diag, key, parent, events_of, prior: Explanation | None) -> Explanation:
    chain = []
    k = key
    while k is not None:
        chain.append(k)
        k = parent[k]
    chain.reverse()
    events = set(prior.events) if prior is not None else set()
    for k in chain:
        events.update(events_of[k])
    unpred = {e.uav: e.step for e in events if isinstance(e, Unpredictable)}
    moves: dict[str, list[tuple[Location, int]]] = {}
    for s, _, others in chain:
        for u, (_, loc) in zip(ctx.others, others):
            if u in unpred and s > unpred[u]:
                moves.setdefault(u, []).append((loc, s))
    return Explanation(frozenset(events), {u: tuple(v) for u, v in moves.items()})


def explain(history: History, world: WorldMap, init: State, mission: Plan, *,
            prior: Explanation | None = None, max_cardinality: int = DEFAULT_MAX_CARDINALITY,
            sharing: Sharing = "network") -> Explanation:
    """Minimum-cardinality explanation of ``history``.

    Costs are (number of events, number of unpredictable events). With a
    ``prior`` the search first tries to extend it, then to extend its breaks
    only, then starts from scratch. Among equally cheap explanations the
    search commits to events as late as possible.
    """
    ctx = _Diag(world, init, mission, history)
    attempts: list[Explanation | None] = []
    if prior is not None and prior.events:
        attempts.append(prior)
        pb = frozenset(e for e in prior.events if isinstance(e, Break))
        if pb and pb != prior.events:
            attempts.append(Explanation(pb))
    attempts.append(None)
    for p in attempts:
        found = _search(ctx, p, max_cardinality)
        if found is not None:
            return found
    raise DiagnosisError(f"no explanation with at most {max_cardinality} events for {history.owner}")
