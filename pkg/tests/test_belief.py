import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from uavnet.agent import observe
from uavnet.belief import (
    EMPTY, DiagnosisError, Explanation, History, Hpd, Obs, contradictions, explain, fluent_holds,
    project, unexpected,
)
from uavnet.planner import Plan
from uavnet.transition import Aborted, Break, Move, Unpredictable, Wait, apply, initial_state
from uavnet.world import Location

from cases import anomaly_case
from oracles import minimal_explanation


def L(x, y):
    return Location(x, y)


def test_history_validation():
    with pytest.raises(ValueError):
        History("u1", (Obs(("at", "u1", L(0, 0)), True, 3), Hpd(Wait("u1"), 1)), 3)
    with pytest.raises(ValueError):
        History("u1", (Hpd(Wait("u2"), 0),), 0)
    with pytest.raises(ValueError):
        History("u1", (Hpd(Wait("u1"), 4),), 2)
    with pytest.raises(ValueError):
        History("u1").observe([Obs(("at", "u1", L(0, 0)), True, 1)], 2)


def test_history_folding():
    h = History("u1").observe([Obs(("at", "u1", L(0, 0)), True, 0)], 0).record(Move("u1", L(1, 0)), 0)
    h = h.observe([], 1)
    assert h.currstep == 1
    assert h.own_actions == {0: Move("u1", L(1, 0))}
    assert len(h.observations) == 1
    assert str(h.entries[1]) == "hpd(move(u1,(1,0)),0)"


def test_explanation_validation():
    with pytest.raises(ValueError):
        Explanation(frozenset({Unpredictable("u2", 1)}))
    with pytest.raises(ValueError):
        Explanation(frozenset({Aborted("u2", 2), Unpredictable("u2", 1)}))
    with pytest.raises(ValueError):
        Explanation(frozenset({Aborted("u2", 0)}), {"u2": ((L(0, 0), 1),)})
    e = Explanation(frozenset({Aborted("u2", 1), Unpredictable("u2", 2), Break("r1", 0)}))
    assert e.cardinality == 3 and e.n_unpredictable == 1
    assert e.aborted_at("u2") == 1 and e.unpredictable_at("u2") == 2 and e.aborted_at("u1") is None
    assert str(e) == "{break(r1,0), aborted(u2,1), unpredictable(u2,2)}"


def test_fluent_holds(line_world):
    s = initial_state(line_world, {"u1": (1, 0), "u2": (3, 0)})
    assert fluent_holds(line_world, s, ("at", "u1", L(1, 0)))
    assert not fluent_holds(line_world, s, ("near", "u1", "u2"))
    assert fluent_holds(line_world, s, ("in_contact", "u1", "u2"))  # via r1
    s2 = apply(s, {}, [Break("r1", 0)], line_world)
    assert not fluent_holds(line_world, s2, ("in_contact", "u1", "u2"))
    assert not fluent_holds(line_world, s2, ("in_contact", "u1", "r1"))
    with pytest.raises(ValueError):
        fluent_holds(line_world, s, ("smell", "u1"))


@pytest.fixture
def scene(line_world):
    init = initial_state(line_world, {"u1": (0, 0), "u2": (2, 0)})
    mission = Plan(3, {"u1": (Move("u1", L(1, 0)), Wait("u1"), Wait("u1")),
                       "u2": (Move("u2", L(3, 0)), Move("u2", L(4, 0)), Move("u2", L(3, 0)))})
    return line_world, init, mission


def _history(world, init, mission, exo=(), until=3, unpredictable_path=None):
    """u1's history when the truth follows ``mission`` plus ``exo``."""
    state, h = init, History("u1")
    aborted = {e.uav: e.step for e in exo if isinstance(e, Aborted)}
    for s in range(until):
        h = h.observe(observe(state, world, "u1"), s)
        joint = {"u1": mission.action_at("u1", s)}
        if unpredictable_path and s + 1 in unpredictable_path:
            joint["u2"] = Move("u2", unpredictable_path[s + 1])
        elif "u2" in aborted and s >= aborted["u2"]:
            joint["u2"] = Wait("u2")
        else:
            joint["u2"] = mission.action_at("u2", s)
        h = h.record(joint["u1"], s)
        state = apply(state, joint, [e for e in exo if isinstance(e, Break) and e.step == s], world)
    return h.observe(observe(state, world, "u1"), until)


def test_project_follows_mission_and_breaks(scene):
    world, init, mission = scene
    traj = project(world, init, mission, {0: Move("u1", L(1, 0))}, Explanation(frozenset({Break("r1", 1)})), 3, "u1")
    assert [s.step for s in traj] == [0, 1, 2, 3]
    assert traj[3].at == {"u1": L(1, 0), "u2": L(3, 0)}
    assert "r1" not in traj[1].down and "r1" in traj[2].down


def test_project_aborted_waits(scene):
    world, init, mission = scene
    traj = project(world, init, mission, {}, Explanation(frozenset({Aborted("u2", 1)})), 3, "u1")
    assert [s.at["u2"] for s in traj] == [L(2, 0), L(3, 0), L(3, 0), L(3, 0)]


def test_project_inconsistent_hypothesis(scene):
    world, init, mission = scene
    bad = Explanation(frozenset({Aborted("u2", 0), Unpredictable("u2", 0)}), {"u2": ((L(4, 0), 1),)})
    with pytest.raises(ValueError):
        project(world, init, mission, {}, bad, 2, "u1")


def test_nominal_history_needs_no_explanation(scene):
    world, init, mission = scene
    h = _history(world, init, mission)
    traj = project(world, init, mission, h.own_actions, EMPTY, 3, "u1")
    assert not unexpected(h, traj, world)
    assert explain(h, world, init, mission) == EMPTY


def test_relay_break_diagnosed(scene):
    world, init, mission = scene
    h = _history(world, init, mission, exo=[Break("r1", 1)])
    traj = project(world, init, mission, h.own_actions, EMPTY, 3, "u1")
    assert contradictions(h, traj, world)
    e = explain(h, world, init, mission)
    assert e.events == {Break("r1", 1)}


def test_abort_diagnosed(scene):
    world, init, mission = scene
    h = _history(world, init, mission, exo=[Aborted("u2", 1)])
    e = explain(h, world, init, mission)
    assert e.cardinality == 1
    [ev] = e.events
    assert isinstance(ev, Aborted) and ev.uav == "u2"


def test_unpredictable_diagnosed(scene):
    world, init, mission = scene
    # u2 heads back toward the base instead of out to the target
    h = _history(world, init, mission, unpredictable_path={1: L(1, 0), 2: L(2, 0), 3: L(1, 0)})
    e = explain(h, world, init, mission)
    assert e.n_unpredictable == 1
    traj = project(world, init, mission, h.own_actions, e, 3, "u1")
    assert not contradictions(h, traj, world)


def test_prior_is_extended(scene):
    world, init, mission = scene
    h2 = _history(world, init, mission, exo=[Break("r1", 0)], until=2)
    first = explain(h2, world, init, mission)
    h3 = _history(world, init, mission, exo=[Break("r1", 0), Aborted("u2", 2)], until=3)
    second = explain(h3, world, init, mission, prior=first)
    assert first.events <= second.events


def test_budget_exhaustion_raises(scene):
    world, init, mission = scene
    h = _history(world, init, mission, exo=[Break("r1", 1)])
    with pytest.raises(DiagnosisError):
        explain(h, world, init, mission, max_cardinality=0)


@pytest.mark.parametrize("seed", [3, 5, 11, 17, 23, 42])
def test_minimality_sample(seed):
    world, init, mission, h = anomaly_case(seed)
    e = explain(h, world, init, mission)
    assert (e.cardinality, e.n_unpredictable) == minimal_explanation(world, init, h, mission, max_card=4)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10_000))
def test_explanations_are_consistent(seed):
    world, init, mission, h = anomaly_case(seed)
    e = explain(h, world, init, mission)
    traj = project(world, init, mission, h.own_actions, e, h.currstep, "u1")
    assert not contradictions(h, traj, world)
    for ev in e.events:
        if isinstance(ev, Break):
            assert not world.is_uav(ev.node)
