"""Per-UAV control loop: observe, check expectations, explain, replan, act."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Iterable

from .belief import (
    EMPTY, DiagnosisError, Explanation, History, Obs, contradictions, explain, project,
)
from .connectivity import components, link_view
from .planner import DEFAULT_MAX_HORIZON, Goal, Plan, PlanningError, replan
from .transition import Action, Sharing, State, Wait, executable
from .world import WorldMap, dist2


class AgentFault(RuntimeError):
    """Diagnosis or planning failed; the harness halts the agent."""


@dataclass(frozen=True)
class Diagnosis:
    step: int
    explanation: Explanation
    new_events: frozenset
    contradicted: tuple
    seconds: float


@dataclass(frozen=True)
class Replan:
    step: int
    plan: Plan
    seconds: float


@dataclass(frozen=True)
class AgentState:
    id: str
    history: History
    plan: Plan
    mission: Plan
    goal: Goal
    expl: Explanation = EMPTY
    sharing: Sharing = "network"
    max_horizon: int = DEFAULT_MAX_HORIZON
    seed: int = 0
    done: bool = False
    diagnoses: tuple[Diagnosis, ...] = ()
    replans: tuple[Replan, ...] = ()


def new_agent(uav: str, mission: Plan, goal: Goal, *, sharing: Sharing = "network",
              max_horizon: int = DEFAULT_MAX_HORIZON, seed: int = 0) -> AgentState:
    return AgentState(uav, History(uav, (), mission.start), mission, mission, goal,
                      sharing=sharing, max_horizon=max_horizon, seed=seed)


def observe(true_state: State, world: WorldMap, self_id: str, *, network: bool = True) -> set[Obs]:
    """What ``self_id`` perceives at ``true_state.step``.

    Contact with every other radio node (only when the agent reasons about
    the network), ``near`` for every other UAV with its position when within
    sensing radius (= radio range), and the agent's own position.
    """
    if self_id in true_state.down:
        raise ValueError(f"{self_id} is down and cannot observe")
    s = true_state.step
    pos = true_state.positions(world)
    out = {Obs(("at", self_id, pos[self_id]), True, s)}
    if network:
        view = link_view(pos, true_state.down, world.radio_range)
        mine = next((c for c in components(view) if self_id in c), frozenset())
        for n in world.node_ids:
            if n != self_id:
                out.add(Obs(("in_contact", self_id, n), n in mine, s))
    for u in world.uav_ids:
        if u == self_id:
            continue
        near = u not in true_state.down and dist2(pos[self_id], pos[u]) <= world.range2
        out.add(Obs(("near", self_id, u), near, s))
        if near:
            out.add(Obs(("at", u, pos[u]), True, s))
    return out


def goal_achieved(state: State, goal: Goal) -> bool:
    return goal.targets <= set(state.delivered)


def agent_step(a: AgentState, new_obs: Iterable[Obs], world: WorldMap, init: State,
               step: int | None = None) -> tuple[AgentState, Action | None]:
    """One iteration of the control loop. Returns ``None`` as the action once
    the agent believes the goal is achieved."""
    new_obs = list(new_obs)
    if step is None:
        step = max((o.step for o in new_obs), default=a.history.currstep)
    if a.done:
        return a, None
    h = a.history.observe(new_obs, step)
    a = replace(a, history=h)

    def belief(expl: Explanation) -> list[State]:
        return project(world, init, a.mission, h.own_actions, expl, step, a.id, a.sharing)

    traj = belief(a.expl)
    bad = contradictions(h, traj, world)
    need_plan = False
    if bad:
        t0 = time.perf_counter()
        try:
            expl = explain(h, world, init, a.mission, prior=a.expl, sharing=a.sharing)
        except DiagnosisError as exc:
            raise AgentFault(f"{a.id} at step {step}: {exc}") from exc
        diag = Diagnosis(step, expl, frozenset(expl.events - a.expl.events), tuple(bad),
                         time.perf_counter() - t0)
        a = replace(a, expl=expl, diagnoses=a.diagnoses + (diag,))
        traj = belief(expl)
        need_plan = True
    now = traj[-1]
    if goal_achieved(now, a.goal):
        return replace(a, done=True), None
    if not need_plan and a.plan.action_at(a.id, step) is None:
        # plan ran out while the belief still misses pictures
        need_plan = True
    if need_plan:
        t0 = time.perf_counter()
        try:
            plan = replan(world, now, a.mission, a.expl, a.goal, a.id,
                          max_horizon=step + a.max_horizon, seed=a.seed, sharing=a.sharing)
        except PlanningError as exc:
            raise AgentFault(f"{a.id} at step {step}: {exc}") from exc
        a = replace(a, plan=plan, replans=a.replans + (Replan(step, plan, time.perf_counter() - t0),))
    act = a.plan.action_at(a.id, step)
    if act is None or not executable(now, act, world):
        act = Wait(a.id)
    a = replace(a, history=a.history.record(act, step))
    return a, act
