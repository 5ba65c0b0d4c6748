"""Consistency probability of the closed cycle against the phase-shifter angle.

Writes one CSV row per angle with the retrodictive probability and both
independent checks (path-amplitude sum, forward interferometer).

    python3 scripts/cycle_curve.py --points 256 --out cycle.csv
"""

import argparse
import csv
import math
import sys
from dataclasses import dataclass

from retroloop.scenarios import ClosedCycleConfig, cycle_analysis, label, path_amplitude_oracle


@dataclass(frozen=True)
class CycleStudy:
    points: int = 256
    start: float = 0.0
    end: float = 2 * math.pi  # excluded, so the grid does not repeat its first angle


def main(study: CycleStudy, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["phi", "cycle_probability", "path_probability", "interferometer_probability", "verdict"])
    worst = 0.0
    for k in range(study.points):
        phi = study.start + (study.end - study.start) * k / study.points
        rec = cycle_analysis(ClosedCycleConfig(phi))[label((0, 1))]
        path = abs(path_amplitude_oracle(phi)) ** 2
        worst = max(worst, abs(rec.cycle_probability - path), abs(rec.cycle_probability - rec.oracle_probability))
        w.writerow([f"{phi:.12g}", f"{rec.cycle_probability:.12g}", f"{path:.12g}", f"{rec.oracle_probability:.12g}", rec.consistency.value])
    print(f"largest disagreement between the three calculations: {worst:.2e}", file=sys.stderr)


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=CycleStudy.points)
    p.add_argument("--out", type=argparse.FileType("w"), default=sys.stdout)
    a = p.parse_args()
    main(CycleStudy(points=a.points), a.out)
