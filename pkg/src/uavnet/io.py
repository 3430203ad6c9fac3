"""Scenario files, trace serialisation and per-step CSV export."""

from __future__ import annotations

import csv
import io as _io
import json
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .agent import Diagnosis
from .belief import Explanation, Obs
from .connectivity import components, link_view
from .harness import Scenario, StepRecord, Trace
from .planner import DEFAULT_MAX_HORIZON, Goal, Metrics, Plan
from .transition import EVENT_TYPES, Action, Move, State, Wait
from .world import Location, WorldError, WorldMap, build_world

BUNDLED = ("instance1", "instance2", "exp1", "exp3")


class ScenarioError(ValueError):
    """Scenario document failed validation; ``path`` locates the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path
        self.message = message


def schema() -> dict:
    return json.loads(resources.files("uavnet.data").joinpath("scenario.schema.json").read_text())


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"no bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files("uavnet.scenarios").joinpath(f"{name}.json")))


def _path(parts) -> str:
    return "/".join(str(p) for p in parts)


def validate(doc: Mapping) -> None:
    """Schema check followed by cross-reference checks."""
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise ScenarioError(_path(e.absolute_path), e.message)
    grid = doc["grid"]
    sp = grid.get("spacing", 1)

    def on_grid(x: int, y: int, where: str) -> None:
        if x % sp or y % sp or not (0 <= x < grid["width"] * sp and 0 <= y < grid["height"] * sp):
            raise ScenarioError(where, f"({x},{y}) is not a waypoint of the {grid['width']}x{grid['height']} grid")

    ids: dict[str, str] = {}
    for i, n in enumerate(doc["nodes"]):
        if n["id"] in ids:
            raise ScenarioError(f"nodes/{i}/id", f"duplicate id {n['id']!r}")
        ids[n["id"]] = n["kind"]
        if n["kind"] != "uav":
            on_grid(n["x"], n["y"], f"nodes/{i}")
    if sum(1 for k in ids.values() if k == "home_base") != 1:
        raise ScenarioError("nodes", "exactly one home_base required")
    for i, t in enumerate(doc["targets"]):
        if t["id"] in ids:
            raise ScenarioError(f"targets/{i}/id", f"duplicate id {t['id']!r}")
        ids[t["id"]] = "target"
        on_grid(t["x"], t["y"], f"targets/{i}")
    uavs = {n for n, k in ids.items() if k == "uav"}
    starts = doc["uav_start_positions"]
    for u in starts:
        if u not in uavs:
            raise ScenarioError(f"uav_start_positions/{u}", f"{u!r} is not a UAV")
        on_grid(*starts[u], f"uav_start_positions/{u}")
    missing = sorted(uavs - set(starts))
    if missing:
        raise ScenarioError("uav_start_positions", f"missing start position for {missing[0]!r}")
    max_steps = doc.get("max_steps", 40)
    for i, ev in enumerate(doc.get("exo_events", [])):
        kind = ids.get(ev["node"])
        if kind is None:
            raise ScenarioError(f"exo_events/{i}/node", f"unknown node {ev['node']!r}")
        if ev["type"] == "break" and kind not in ("relay", "home_base"):
            raise ScenarioError(f"exo_events/{i}/node", "only relays and the home base can break")
        if ev["type"] != "break" and kind != "uav":
            raise ScenarioError(f"exo_events/{i}/node", f"{ev['type']} applies to UAVs only")
        if ev["step"] > max_steps:
            raise ScenarioError(f"exo_events/{i}/step", f"step {ev['step']} exceeds max_steps {max_steps}")
    for i, t in enumerate(doc.get("goal", [])):
        if ids.get(t) != "target":
            raise ScenarioError(f"goal/{i}", f"unknown target {t!r}")


def scenario_from_dict(doc: Mapping, name: str | None = None) -> Scenario:
    validate(doc)
    grid = doc["grid"]
    relays = {n["id"]: (n["x"], n["y"]) for n in doc["nodes"] if n["kind"] == "relay"}
    base = next(n for n in doc["nodes"] if n["kind"] == "home_base")
    uavs = [n["id"] for n in doc["nodes"] if n["kind"] == "uav"]
    try:
        world = build_world(
            width=grid["width"], height=grid["height"], spacing=grid.get("spacing", 1),
            connectivity=grid.get("connectivity", 4), radio_range=doc["radio_range"], relays=relays,
            home_base=(base["id"], (base["x"], base["y"])), uavs=uavs,
            targets={t["id"]: (t["x"], t["y"]) for t in doc["targets"]},
        )
    except WorldError as exc:
        raise ScenarioError("", str(exc)) from exc
    goal_ids = doc.get("goal", [t["id"] for t in doc["targets"]])
    events = tuple(EVENT_TYPES[e["type"]](e["node"], e["step"]) for e in doc.get("exo_events", []))
    return Scenario(
        world=world,
        start={u: Location(*p) for u, p in doc["uav_start_positions"].items()},
        goal=Goal(frozenset(goal_ids)) if goal_ids else None,
        exo_script=events,
        mode=doc.get("mode", "network_aware"),
        max_steps=doc.get("max_steps", 40),
        seed=doc.get("seed", 0),
        max_horizon=doc.get("max_horizon", DEFAULT_MAX_HORIZON),
        name=doc.get("name", name or "scenario"),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file, or a bundled scenario by name."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}", exc.msg) from exc
    return scenario_from_dict(doc, name=p.stem)


# ---------------------------------------------------------------------------
# trace <-> JSON

def _loc(l: Location) -> list[int]:
    return [l.x, l.y]


def _act(a: Action) -> Any:
    return _loc(a.to) if isinstance(a, Move) else "wait"


def _unact(u: str, v: Any) -> Action:
    return Wait(u) if v == "wait" else Move(u, Location(*v))


def _event(e) -> dict:
    return {"type": e.kind, "node": e.node, "step": e.step}


def _unevent(d: Mapping):
    return EVENT_TYPES[d["type"]](d["node"], d["step"])


def state_to_dict(s: State) -> dict:
    return {
        "step": s.step,
        "at": {u: _loc(l) for u, l in sorted(s.at.items())},
        "down": sorted(s.down),
        "pics": {n: sorted([t, ts] for t, ts in held) for n, held in sorted(s.pics.items())},
        "delivered": dict(sorted(s.delivered.items())),
    }


def state_from_dict(d: Mapping) -> State:
    return State(
        d["step"],
        {u: Location(*l) for u, l in d["at"].items()},
        frozenset(d["down"]),
        {n: frozenset((t, ts) for t, ts in held) for n, held in d["pics"].items()},
        dict(d["delivered"]),
    )


def _obs(o: Obs) -> list:
    name, a, b = o.fluent
    return [name, a, _loc(b) if name == "at" else b, o.value, o.step]


def _unobs(v: list) -> Obs:
    name, a, b, value, step = v
    return Obs((name, a, Location(*b) if name == "at" else b), value, step)


def _expl(e: Explanation) -> dict:
    return {
        "events": [_event(x) for x in e.sorted_events()],
        "hypo_moves": {u: [[*_loc(l), s] for l, s in mv] for u, mv in sorted(e.hypo_moves.items())},
    }


def _unexpl(d: Mapping) -> Explanation:
    return Explanation(
        frozenset(_unevent(x) for x in d["events"]),
        {u: tuple((Location(x, y), s) for x, y, s in mv) for u, mv in d["hypo_moves"].items()},
    )


def plan_to_dict(p: Plan) -> dict:
    return {"start": p.start, "horizon": p.horizon,
            "actions": {u: [_act(a) for a in acts] for u, acts in sorted(p.actions.items())}}


def plan_from_dict(d: Mapping) -> Plan:
    return Plan(d["horizon"], {u: tuple(_unact(u, a) for a in acts) for u, acts in d["actions"].items()},
                d["start"])


def trace_to_dict(t: Trace, *, timings: bool = True) -> dict:
    out = {
        "scenario": t.scenario,
        "mode": t.mode,
        "seed": t.seed,
        "plan": plan_to_dict(t.plan),
        "steps": [
            {
                "step": r.step,
                "state": state_to_dict(r.state),
                "observations": {u: [_obs(o) for o in obs] for u, obs in sorted(r.observations.items())},
                "actions": {u: _act(a) for u, a in sorted(r.actions.items())},
                "exo": [_event(e) for e in r.exo],
                "done": list(r.done),
            }
            for r in t.steps
        ],
        "final": state_to_dict(t.final),
        "metrics": {"mission_length": t.metrics.mission_length, "total_staleness": t.metrics.total_staleness,
                    "delivered_count": t.metrics.delivered_count},
        "diagnoses": {
            u: [{"step": d.step, "explanation": _expl(d.explanation),
                 "new_events": [_event(e) for e in sorted(d.new_events, key=lambda e: (e.kind, e.node, e.step))],
                 "contradicted": [_obs(o) for o in d.contradicted]} for d in ds]
            for u, ds in sorted(t.diagnoses.items())
        },
        "replans": {u: list(v) for u, v in sorted(t.replans.items())},
        "faults": dict(sorted(t.faults.items())),
    }
    if timings:
        out["timings"] = {u: [list(x) for x in v] for u, v in sorted(t.timings.items())}
    return out


def trace_from_dict(d: Mapping) -> Trace:
    steps = tuple(
        StepRecord(
            r["step"], state_from_dict(r["state"]),
            {u: tuple(_unobs(o) for o in obs) for u, obs in r["observations"].items()},
            {u: _unact(u, a) for u, a in r["actions"].items()},
            tuple(_unevent(e) for e in r["exo"]),
            tuple(r["done"]),
        )
        for r in d["steps"]
    )
    return Trace(
        scenario=d["scenario"], mode=d["mode"], seed=d["seed"], plan=plan_from_dict(d["plan"]),
        steps=steps, final=state_from_dict(d["final"]), metrics=Metrics(**d["metrics"]),
        diagnoses={
            u: tuple(Diagnosis(x["step"], _unexpl(x["explanation"]),
                               frozenset(_unevent(e) for e in x["new_events"]),
                               tuple(_unobs(o) for o in x["contradicted"]), 0.0) for x in ds)
            for u, ds in d["diagnoses"].items()
        },
        replans={u: tuple(v) for u, v in d["replans"].items()},
        faults=dict(d["faults"]),
        timings={u: tuple(tuple(x) for x in v) for u, v in d.get("timings", {}).items()},
    )


def dumps_trace(t: Trace, *, timings: bool = True) -> str:
    return json.dumps(trace_to_dict(t, timings=timings), indent=1, sort_keys=True)


def loads_trace(text: str) -> Trace:
    return trace_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# CSV

def csv_header(world: WorldMap) -> list[str]:
    cols = ["step"]
    for u in world.uav_ids:
        cols += [f"{u}_x", f"{u}_y"]
    return cols + ["contact", "delivered", "cumulative_staleness"]


def state_row(world: WorldMap, s: State) -> list:
    row: list = [s.step]
    for u in world.uav_ids:
        row += [s.at[u].x, s.at[u].y]
    view = link_view(s.positions(world), s.down, world.radio_range)
    base_comp = next((c for c in components(view) if world.home_base in c), frozenset())
    # one character per node in world.node_ids order: 1 = can reach the home base
    row.append("".join("1" if n in base_comp else "0" for n in world.node_ids))
    row.append(len(s.delivered))
    taken = s.taken_at()
    row.append(sum(min(s.delivered.get(t, s.step), s.step) - ts for t, ts in taken.items()))
    return row


def trace_csv(world: WorldMap, t: Trace) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(world))
    for s in t.states:
        w.writerow(state_row(world, s))
    return buf.getvalue()


def comparison_csv(rows: list[tuple[str, Metrics]]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "mission_length", "total_staleness", "delivered"])
    for mode, m in rows:
        w.writerow([mode, m.mission_length, m.total_staleness, m.delivered_count])
    return buf.getvalue()
