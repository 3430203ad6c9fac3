import pytest

from uavnet import io as sio
from uavnet.harness import run
from uavnet.world import build_world

_CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(n: int, ok: bool, detail: str) -> None:
    _CRITERIA[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def line_world():
    """Five waypoints in a row, base at the left end, one relay, two UAVs."""
    return build_world(
        width=5, height=1, radio_range=1, relays={"r1": (2, 0)},
        uavs=["u1", "u2"], targets={"t1": (4, 0)},
    )


@pytest.fixture
def square_world():
    return build_world(
        width=3, height=3, radio_range=1, uavs=["u1", "u2"],
        targets={"t1": (2, 2), "t2": (2, 0)},
    )


@pytest.fixture(scope="session")
def scenarios():
    return {name: sio.load_scenario(name) for name in sio.BUNDLED}


class _Traces(dict):
    """Bundled-scenario traces keyed by (name, mode), simulated on demand."""

    def __init__(self, scenarios):
        super().__init__()
        self.scenarios = scenarios

    def __missing__(self, key):
        name, mode = key
        self[key] = t = run(self.scenarios[name].with_mode(mode))
        return t


@pytest.fixture(scope="session")
def bundled_traces(scenarios):
    return _Traces(scenarios)


@pytest.fixture(scope="session")
def instance2_traces(bundled_traces):
    return {mode: bundled_traces["instance2", mode] for mode in ("network_aware", "network_unaware")}
