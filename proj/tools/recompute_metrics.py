#!/usr/bin/env python3
"""Recompute K=1 minADE/minFDE/actorMR from an eval run's metrics.json forecasts
and compare them with the reported metrics.json and metrics.csv values."""

import csv
import json
import math
import sys
from pathlib import Path


def agent_errors(pred, truth):
    d = [math.hypot(p[0] - t[0], p[1] - t[1]) for p, t in zip(pred, truth, strict=True)]
    return sum(d) / len(d), d[-1]


def recompute(report):
    ade, fde = [], []
    for scenario in report["per_scenario"]:
        if scenario["aborted"]:
            continue
        for agent in scenario["forecasts"]:
            a, f = agent_errors(agent["prediction"], agent["truth"])
            ade.append(a)
            fde.append(f)
    if not ade:
        return 0.0, 0.0, 0.0, 0
    n = len(ade)
    return sum(ade) / n, sum(fde) / n, sum(1 for f in fde if f > 2.0) / n, n


def main(run_dirs):
    failed = False
    for run in map(Path, run_dirs):
        report = json.loads((run / "metrics.json").read_text())
        with open(run / "metrics.csv", newline="") as fh:
            row = next(csv.DictReader(fh))
        ade, fde, mr, n = recompute(report)
        checks = [
            ("agents", n, report["agents"], 0),
            ("json minADE", ade, report["minADE"], 1e-9),
            ("json minFDE", fde, report["minFDE"], 1e-9),
            ("json actorMR", mr, report["actorMR"], 1e-9),
            ("csv minADE", ade, float(row["minADE"]), 1e-9),
            ("csv minFDE", fde, float(row["minFDE"]), 1e-9),
            ("csv actorMR", mr, float(row["actorMR"]), 1e-9),
        ]
        for name, mine, theirs, tol in checks:
            ok = abs(mine - theirs) <= tol
            failed |= not ok
            print(f"{'ok  ' if ok else 'FAIL'} {run.name} {name}: recomputed {mine!r} reported {theirs!r}")
    return 1 if failed else 0


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit("usage: recompute_metrics.py RUN_DIR...")
    sys.exit(main(sys.argv[1:]))
