import pytest
from hypothesis import given, settings, strategies as st

from uavnet.transition import (
    Aborted, Break, ExecutabilityError, Move, Unpredictable, Wait, apply, executable,
    initial_state, total_staleness,
)
from uavnet.world import Location, WorldError, build_world


def L(x, y):
    return Location(x, y)


def test_initial_state_photographs_start(line_world):
    s = initial_state(line_world, {"u1": (4, 0), "u2": (0, 0)})
    assert s.step == 0
    assert ("t1", 0) in s.pics["u1"]
    assert s.taken_at() == {"t1": 0}
    assert s.delivered == {}


def test_initial_state_errors(line_world):
    with pytest.raises(WorldError):
        initial_state(line_world, {"u1": (9, 0), "u2": (0, 0)})
    with pytest.raises(WorldError):
        initial_state(line_world, {"u1": (0, 0), "u2": (0, 0), "u9": (0, 0)})
    with pytest.raises(KeyError):
        initial_state(line_world, {"u1": (0, 0)})


def test_executable(line_world):
    s = initial_state(line_world, {"u1": (0, 0), "u2": (4, 0)})
    assert executable(s, Move("u1", L(1, 0)), line_world)
    assert not executable(s, Move("u1", L(2, 0)), line_world)
    assert executable(s, Wait("u1"), line_world)
    with pytest.raises(WorldError):
        executable(s, Wait("u7"), line_world)


def test_move_photographs_and_floods(line_world):
    # u2 sits on the relay; u1 walks onto the target
    s = initial_state(line_world, {"u1": (3, 0), "u2": (1, 0)})
    s1 = apply(s, {"u1": Move("u1", L(4, 0)), "u2": Wait("u2")}, (), line_world)
    assert s1.step == 1
    assert s1.taken_at() == {"t1": 1}
    # u1 at 4 is out of range of r1 at 2 (range 1)
    assert s1.delivered == {}
    s2 = apply(s1, {"u1": Move("u1", L(3, 0))}, (), line_world)
    # u1(3) - r1(2) - u2(1) - base(0) chain
    assert s2.delivered == {"t1": 2}
    assert total_staleness(s2) == 1
    assert s2.holders("t1") == {"u1", "u2", "r1", "base"}


def test_first_capture_wins(line_world):
    s = initial_state(line_world, {"u1": (4, 0), "u2": (3, 0)})
    s1 = apply(s, {"u1": Move("u1", L(3, 0)), "u2": Move("u2", L(4, 0))}, (), line_world)
    assert s1.taken_at() == {"t1": 0}


def test_break_applies_before_sharing(line_world):
    s = initial_state(line_world, {"u1": (3, 0), "u2": (1, 0)})
    s1 = apply(s, {"u1": Move("u1", L(4, 0))}, (), line_world)
    s2 = apply(s1, {"u1": Move("u1", L(3, 0))}, [Break("r1", 1)], line_world)
    assert "r1" in s2.down
    assert s2.delivered == {}


def test_behaviour_events_ignored_by_apply(line_world):
    s = initial_state(line_world, {"u1": (0, 0), "u2": (1, 0)})
    s1 = apply(s, {"u2": Move("u2", L(2, 0))}, [Aborted("u2", 0), Unpredictable("u2", 0)], line_world)
    assert s1.at["u2"] == L(2, 0) and not s1.down


def test_apply_errors(line_world):
    s = initial_state(line_world, {"u1": (0, 0), "u2": (1, 0)})
    with pytest.raises(ExecutabilityError):
        apply(s, {"u1": Move("u1", L(3, 0))}, (), line_world)
    with pytest.raises(WorldError):
        apply(s, {"u1": Wait("u2")}, (), line_world)
    with pytest.raises(WorldError):
        apply(s, {}, [Break("r1", 3)], line_world)
    with pytest.raises(WorldError):
        apply(s, {}, [Break("zz", 0)], line_world)
    with pytest.raises(ValueError):
        apply(s, {}, (), line_world, "smoke")


def test_down_uav_cannot_act(line_world):
    s = initial_state(line_world, {"u1": (0, 0), "u2": (1, 0)}, down={"u2"})
    assert not executable(s, Wait("u2"), line_world)


def test_direct_sharing_needs_base_range():
    w = build_world(width=6, height=1, radio_range=1, relays={"r1": (2, 0)}, uavs=["u1", "u2"],
                    targets={"t1": (3, 0)})
    s = initial_state(w, {"u1": (3, 0), "u2": (1, 0)}, sharing="direct")
    # u1 - r1 - u2 - base chain exists, but direct sharing ignores it
    assert s.delivered == {}
    net = initial_state(w, {"u1": (3, 0), "u2": (1, 0)}, sharing="network")
    assert net.delivered == {"t1": 0}
    s1 = apply(s, {"u1": Move("u1", L(2, 0))}, (), w, "direct")
    s2 = apply(s1, {"u1": Move("u1", L(1, 0))}, (), w, "direct")
    assert s2.delivered == {"t1": 2}


def test_down_base_receives_nothing(line_world):
    s = initial_state(line_world, {"u1": (4, 0), "u2": (0, 0)}, down={"base"})
    s = apply(s, {"u1": Move("u1", L(3, 0))}, (), line_world)
    s = apply(s, {"u1": Move("u1", L(2, 0))}, (), line_world)
    s = apply(s, {"u1": Move("u1", L(1, 0))}, (), line_world)
    assert s.delivered == {}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=12),
       st.integers(0, 3))
def test_random_walk_invariants(choices, break_at):
    w = build_world(width=3, height=3, radio_range=1, relays={"r1": (1, 1)}, uavs=["u1", "u2"],
                    targets={"t1": (2, 2), "t2": (2, 0)})
    s = initial_state(w, {"u1": (0, 0), "u2": (0, 0)})
    seen_taken: dict = {}
    for k, (c1, c2) in enumerate(choices):
        joint = {}
        for u, c in (("u1", c1), ("u2", c2)):
            nbrs = sorted(w.adjacency[s.at[u]])
            joint[u] = Wait(u) if c >= len(nbrs) else Move(u, nbrs[c])
        exo = [Break("r1", k)] if k == break_at else []
        prev = s
        s = apply(s, joint, exo, w)
        assert s.step == prev.step + 1
        assert prev.down <= s.down
        for t, d in prev.delivered.items():
            assert s.delivered[t] == d
        for t, ts in s.taken_at().items():
            assert seen_taken.setdefault(t, ts) == ts
            if t in s.delivered:
                assert s.delivered[t] >= ts
        for n, held in prev.pics.items():
            assert {t for t, _ in held} <= {t for t, _ in s.pics[n]}
    assert total_staleness(s) >= 0
