"""Network-aware vs network-unaware metrics on every bundled scenario.

Prints the comparison table and optionally writes it
as CSV:  python scripts/compare_all.py [--csv out.csv]
"""

import argparse
import csv
import sys

from uavnet import io as sio
from uavnet.harness import compare


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    rows = []
    print(f"{'scenario':<10} {'mode':<16} {'length':>6} {'staleness':>9}   dL%    dS%")
    for name in sio.BUNDLED:
        c, _, _ = compare(sio.load_scenario(name))
        print(f"{name:<10} {'network_aware':<16} {c.aware.mission_length:>6} {c.aware.total_staleness:>9}")
        print(f"{'':<10} {'network_unaware':<16} {c.unaware.mission_length:>6} {c.unaware.total_staleness:>9}"
              f"  {c.length_reduction:5.1f}  {c.staleness_reduction:5.1f}")
        for mode, m in (("network_aware", c.aware), ("network_unaware", c.unaware)):
            rows.append([name, mode, m.mission_length, m.total_staleness, m.delivered_count])
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scenario", "mode", "mission_length", "total_staleness", "delivered"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
