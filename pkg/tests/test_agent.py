from dataclasses import replace

import pytest

from uavnet.agent import agent_step, goal_achieved, new_agent, observe
from uavnet.belief import Obs
from uavnet.planner import Goal, Plan, plan_mission
from uavnet.transition import Break, Move, Wait, apply, initial_state
from uavnet.world import Location


def L(x, y):
    return Location(x, y)


def test_observe_network(line_world):
    s = initial_state(line_world, {"u1": (1, 0), "u2": (2, 0)})
    obs = observe(s, line_world, "u1")
    assert Obs(("at", "u1", L(1, 0)), True, 0) in obs
    assert Obs(("near", "u1", "u2"), True, 0) in obs
    assert Obs(("at", "u2", L(2, 0)), True, 0) in obs
    assert Obs(("in_contact", "u1", "base"), True, 0) in obs
    assert {o.fluent[2] for o in obs if o.fluent[0] == "in_contact"} == {"base", "r1", "u2"}


def test_observe_far_uav_and_unaware(line_world):
    s = initial_state(line_world, {"u1": (0, 0), "u2": (4, 0)})
    obs = observe(s, line_world, "u1", network=False)
    assert Obs(("near", "u1", "u2"), False, 0) in obs
    assert not any(o.fluent[0] == "in_contact" for o in obs)
    assert not any(o.fluent[:2] == ("at", "u2") for o in obs)


def test_observe_down_uav_raises(line_world):
    s = initial_state(line_world, {"u1": (0, 0), "u2": (4, 0)}, down={"u1"})
    with pytest.raises(ValueError):
        observe(s, line_world, "u1")


def _mission(world, init):
    return plan_mission(world, init, Goal.all_targets(world), max_horizon=12)


def _drive(world, init, mission, exo=(), steps=12):
    """Run both agents against the truth; returns final agents and state."""
    agents = {u: new_agent(u, mission, Goal.all_targets(world)) for u in world.uav_ids}
    state = init
    for s in range(steps):
        joint = {}
        for u in world.uav_ids:
            agents[u], act = agent_step(agents[u], observe(state, world, u), world, init, step=s)
            joint[u] = act or Wait(u)
        if all(a.done for a in agents.values()):
            break
        state = apply(state, joint, [e for e in exo if e.step == s], world)
    return agents, state


def test_nominal_run_follows_plan(square_world):
    init = initial_state(square_world, {"u1": (0, 0), "u2": (0, 0)})
    mission = _mission(square_world, init)
    agents, state = _drive(square_world, init, mission)
    assert all(a.done for a in agents.values())
    assert goal_achieved(state, Goal.all_targets(square_world))
    assert all(not a.diagnoses and not a.replans for a in agents.values())
    for u, a in agents.items():
        recorded = tuple(act for s, act in sorted(a.history.own_actions.items()))
        assert recorded == mission.actions[u][:len(recorded)]


def test_break_triggers_diagnosis_and_replan(line_world):
    init = initial_state(line_world, {"u1": (0, 0), "u2": (0, 0)})
    mission = _mission(line_world, init)
    agents, state = _drive(line_world, init, mission, exo=[Break("r1", 1)], steps=20)
    diagnosed = [a for a in agents.values() if a.diagnoses]
    assert diagnosed
    for a in diagnosed:
        assert any(isinstance(e, Break) and e.node == "r1" for e in a.expl.events)
        assert a.replans and a.replans[0].step == a.diagnoses[0].step
    assert "t1" in state.delivered


def test_done_agent_returns_none(square_world):
    init = initial_state(square_world, {"u1": (0, 0), "u2": (0, 0)})
    a = new_agent("u1", Plan(0, {"u1": (), "u2": ()}), Goal(frozenset({"t1"})))
    a2, act = agent_step(a, observe(init, square_world, "u1"), square_world, init, step=0)
    # nothing delivered yet and the plan is empty: the agent replans
    assert act is not None and a2.replans
    done = replace(a2, done=True)
    assert agent_step(done, [], square_world, init, step=1) == (done, None)


def test_inexecutable_planned_move_becomes_wait(line_world):
    init = initial_state(line_world, {"u1": (0, 0), "u2": (0, 0)})
    bogus = Plan(1, {"u1": (Move("u1", L(3, 0)),), "u2": (Wait("u2"),)})
    a = new_agent("u1", bogus, Goal.all_targets(line_world))
    _, act = agent_step(a, observe(init, line_world, "u1"), line_world, init, step=0)
    assert act == Wait("u1")
