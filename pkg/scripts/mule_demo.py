"""Step-by-step view of a planned mission: positions, who can reach the home
base, and when each picture is taken and delivered.

    python scripts/mule_demo.py [scenario]     (default: instance1)
"""

import sys

from uavnet import io as sio
from uavnet.connectivity import components, link_view
from uavnet.harness import central_plan
from uavnet.transition import apply


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    sc = sio.load_scenario(argv[0] if argv else "instance1")
    w = sc.world
    plan = central_plan(sc)
    state = sc.initial("network")
    for k in range(plan.horizon + 1):
        view = link_view(state.positions(w), state.down, w.radio_range)
        base = next(c for c in components(view) if w.home_base in c)
        cols = [f"{u}@{state.at[u].x:>2},{state.at[u].y:<2}{'*' if u in base else ' '}" for u in w.uav_ids]
        taken = state.taken_at()
        pics = " ".join(f"{t}:{taken.get(t, '-')}/{state.delivered.get(t, '-')}" for t in sorted(w.targets))
        print(f"{state.step:>3}  {'  '.join(cols)}  {pics}")
        if k < plan.horizon:
            joint = {u: plan.action_at(u, plan.start + k) for u in w.uav_ids}
            state = apply(state, joint, (), w)
    print("* = in contact with the home base; target:taken/delivered")
    return 0


if __name__ == "__main__":
    sys.exit(main())
