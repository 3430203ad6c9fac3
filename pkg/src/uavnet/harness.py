"""Deterministic lockstep simulation of the agents against the true world.

The true world always has the radio network; ``mode`` only selects how the
agents reason (with or without it). Exogenous events are visible to agents
solely through what they observe.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Literal, Mapping

from .agent import AgentFault, AgentState, Diagnosis, agent_step, new_agent, observe
from .belief import Obs
from .planner import (
    DEFAULT_MAX_HORIZON, Goal, Metrics, Plan, plan_mission, plan_network_unaware,
)
from .transition import (
    Aborted, Action, Break, ExoEvent, Move, State, Unpredictable, Wait, apply, initial_state,
)
from .world import Location, WorldError, WorldMap

Mode = Literal["network_aware", "network_unaware"]
MODES = ("network_aware", "network_unaware")


@dataclass(frozen=True)
class Scenario:
    world: WorldMap
    start: Mapping[str, Location]
    # None only for target-free scenarios
    goal: Goal | None
    exo_script: tuple[ExoEvent, ...] = ()
    mode: Mode = "network_aware"
    max_steps: int = 40
    seed: int = 0
    max_horizon: int = DEFAULT_MAX_HORIZON
    name: str = "scenario"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise WorldError(f"unknown mode {self.mode!r}")
        if self.max_steps < 0:
            raise WorldError("max_steps must be non-negative")
        for ev in self.exo_script:
            if ev.node not in self.world.nodes:
                raise WorldError(f"event {ev} names an unknown node")
            if isinstance(ev, Break) and self.world.is_uav(ev.node):
                raise WorldError(f"{ev}: only relays and the home base can break")
            if isinstance(ev, (Aborted, Unpredictable)) and not self.world.is_uav(ev.node):
                raise WorldError(f"{ev}: only UAVs abort")
            if not 0 <= ev.step <= self.max_steps:
                raise WorldError(f"event {ev} outside [0, {self.max_steps}]")
        missing = [t for t in self.targets if t not in self.world.targets]
        if missing:
            raise WorldError(f"goal names unknown targets {missing}")

    @property
    def targets(self) -> frozenset[str]:
        return self.goal.targets if self.goal is not None else frozenset()

    @property
    def sharing(self) -> str:
        return "network" if self.mode == "network_aware" else "direct"

    def with_mode(self, mode: Mode) -> "Scenario":
        return Scenario(self.world, self.start, self.goal, self.exo_script, mode, self.max_steps,
                        self.seed, self.max_horizon, self.name)

    def initial(self, sharing: str = "network") -> State:
        return initial_state(self.world, self.start, sharing=sharing)


@dataclass(frozen=True)
class StepRecord:
    step: int
    state: State
    observations: Mapping[str, tuple[Obs, ...]]
    actions: Mapping[str, Action]
    exo: tuple[ExoEvent, ...]
    done: tuple[str, ...]


@dataclass(frozen=True)
class Trace:
    scenario: str
    mode: Mode
    seed: int
    plan: Plan
    steps: tuple[StepRecord, ...]
    final: State
    metrics: Metrics
    diagnoses: Mapping[str, tuple[Diagnosis, ...]]
    replans: Mapping[str, tuple[int, ...]]
    faults: Mapping[str, str]
    # wall-clock seconds per reasoning call; excluded from equality
    timings: Mapping[str, tuple[tuple[str, int, float], ...]] = field(default_factory=dict, compare=False)

    @property
    def states(self) -> list[State]:
        return [r.state for r in self.steps] + [self.final]


def metrics_at_termination(state: State, targets: frozenset[str], first_complete: int | None) -> Metrics:
    """Mission length and staleness; pictures taken but never delivered are
    charged up to the termination step."""
    taken = state.taken_at()
    stale = 0
    for t in targets:
        if t in state.delivered:
            stale += state.delivered[t] - taken[t]
        elif t in taken:
            stale += state.step - taken[t]
    length = first_complete if first_complete is not None else state.step
    return Metrics(length, stale, sum(1 for t in targets if t in state.delivered))


def central_plan(sc: Scenario) -> Plan:
    if sc.goal is None:
        return Plan(0, {u: () for u in sc.world.uav_ids})
    if sc.mode == "network_aware":
        return plan_mission(sc.world, sc.initial("network"), sc.goal, max_horizon=sc.max_horizon, seed=sc.seed)
    return plan_network_unaware(sc.world, sc.initial("direct"), sc.goal, max_horizon=sc.max_horizon, seed=sc.seed)


def run(sc: Scenario, plan: Plan | None = None) -> Trace:
    world = sc.world
    sharing = sc.sharing
    aware = sc.mode == "network_aware"
    if plan is None:
        plan = central_plan(sc)
    belief_init = sc.initial(sharing)
    agents: dict[str, AgentState] = {
        u: new_agent(u, plan, sc.goal, sharing=sharing, max_horizon=sc.max_horizon, seed=sc.seed)
        for u in world.uav_ids
    }
    rng = random.Random(sc.seed)
    halted: dict[str, str] = {}   # uav -> "aborted" | "unpredictable" | "fault"
    faults: dict[str, str] = {}
    state = sc.initial("network")
    first_complete = 0 if sc.targets <= set(state.delivered) else None
    records = []
    for s in range(sc.max_steps if sc.goal is not None else 0):
        events = tuple(ev for ev in sc.exo_script if ev.step == s)
        for ev in events:
            if isinstance(ev, Unpredictable):
                halted[ev.uav] = "unpredictable"
            elif isinstance(ev, Aborted):
                halted.setdefault(ev.uav, "aborted")
        observations: dict[str, tuple[Obs, ...]] = {}
        actions: dict[str, Action] = {}
        for u in world.uav_ids:
            if u in halted or agents[u].done:
                continue
            obs = observe(state, world, u, network=aware)
            observations[u] = tuple(sorted(obs, key=_obs_key))
            try:
                agents[u], act = agent_step(agents[u], obs, world, belief_init, step=s)
            except AgentFault as exc:
                halted[u] = "fault"
                faults[u] = str(exc)
                continue
            if act is not None:
                actions[u] = act
        done = tuple(u for u in world.uav_ids if agents[u].done)
        if all(u in halted or agents[u].done for u in world.uav_ids):
            break
        joint = {}
        for u in world.uav_ids:
            if u in actions:
                joint[u] = actions[u]
            elif halted.get(u) == "unpredictable" and u not in state.down:
                nbrs = sorted(world.adjacency.get(state.at[u], ()))
                joint[u] = _random_move(rng, u, state.at[u], nbrs)
            else:
                joint[u] = Wait(u)
        breaks = tuple(ev for ev in events if isinstance(ev, Break))
        records.append(StepRecord(s, state, observations, joint, events, done))
        state = apply(state, joint, breaks, world, "network")
        if first_complete is None and sc.targets <= set(state.delivered):
            first_complete = state.step
    metrics = metrics_at_termination(state, sc.targets, first_complete)
    timings = {
        u: tuple(("diagnosis", d.step, d.seconds) for d in a.diagnoses)
        + tuple(("replan", r.step, r.seconds) for r in a.replans)
        for u, a in agents.items()
    }
    return Trace(
        scenario=sc.name, mode=sc.mode, seed=sc.seed, plan=plan, steps=tuple(records), final=state,
        metrics=metrics,
        diagnoses={u: tuple(_strip(d) for d in a.diagnoses) for u, a in agents.items()},
        replans={u: tuple(r.step for r in a.replans) for u, a in agents.items()},
        faults=faults, timings=timings,
    )


def _random_move(rng: random.Random, u: str, loc: Location, nbrs: list[Location]) -> Action:
    choice = rng.randrange(len(nbrs) + 1)
    return Wait(u) if choice == len(nbrs) else Move(u, nbrs[choice])


def _strip(d: Diagnosis) -> Diagnosis:
    return Diagnosis(d.step, d.explanation, d.new_events, d.contradicted, 0.0)


def _obs_key(o: Obs) -> tuple:
    return (o.step, tuple(str(x) for x in o.fluent), o.value)


@dataclass(frozen=True)
class Comparison:
    aware: Metrics
    unaware: Metrics

    @staticmethod
    def _pct(base: int, new: int) -> float:
        return 0.0 if base == 0 else 100.0 * (base - new) / base

    @property
    def length_reduction(self) -> float:
        return self._pct(self.unaware.mission_length, self.aware.mission_length)

    @property
    def staleness_reduction(self) -> float:
        return self._pct(self.unaware.total_staleness, self.aware.total_staleness)

    def dominates(self) -> bool:
        return self.aware.as_tuple() <= self.unaware.as_tuple()


def compare(sc: Scenario) -> tuple[Comparison, Trace, Trace]:
    ta = run(sc.with_mode("network_aware"))
    tu = run(sc.with_mode("network_unaware"))
    return Comparison(ta.metrics, tu.metrics), ta, tu


def replay(sc: Scenario, trace: Trace) -> list[str]:
    """Re-apply the recorded joint actions and exogenous events; returns a
    list of mismatch descriptions (empty when the trace is faithful)."""
    problems = []
    state = sc.initial("network")
    for rec in trace.steps:
        if rec.state != state:
            problems.append(f"state mismatch at step {rec.step}")
            state = rec.state
        if not rec.actions:
            continue
        breaks = [ev for ev in rec.exo if isinstance(ev, Break)]
        try:
            state = apply(state, rec.actions, breaks, sc.world, "network")
        except (ValueError, WorldError) as exc:
            problems.append(f"step {rec.step}: {exc}")
            return problems
    if state != trace.final:
        problems.append("final state mismatch")
    first = None
    for st in trace.states:
        if sc.targets <= set(st.delivered):
            first = st.step
            break
    if metrics_at_termination(trace.final, sc.targets, first) != trace.metrics:
        problems.append("metrics mismatch")
    return problems
