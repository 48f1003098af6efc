"""Produce a self-contained demo workspace for the CLI.

Writes synthetic events, a geometry file, a simulation config, and a
calibrated library into ./demo so each subcommand can be tried directly:

    python scripts/make_demo_data.py
    socialgame predict --events demo/events.jsonl --library demo/library.json --out demo/report.csv
    socialgame simulate --config demo/sim.json --episodes 20 --seed 1 \
        --library demo/library.json --out demo/metrics.csv
    socialgame serve --addr 127.0.0.1:8765 --library demo/library.json
"""

import json
import time
from dataclasses import replace
from pathlib import Path

from socialgame.events import save_events
from socialgame.expert import GAConfig, ga_optimize, learn_library, save_library
from socialgame.game import PayoffParams
from socialgame.synth import synth_mixed_dataset


def main():
    out = Path("demo")
    out.mkdir(exist_ok=True)
    params = PayoffParams()
    t0 = time.time()
    train = synth_mixed_dataset(60, seed=11, params=params)
    holdout = synth_mixed_dataset(20, seed=12, params=params)
    save_events(train, out / "events.jsonl")
    save_events(holdout, out / "holdout.jsonl")
    ga = GAConfig(population=64, generations=150, seed=11, tol=0.02, patience=25)
    library = learn_library(train, ga, params)
    library.global_entry = ga_optimize(
        train, replace(ga, seed=11 + 104729), params, allow_mixed_categories=True
    )
    save_library(library, out / "library.json")
    (out / "intersection.json").write_text(json.dumps({
        "lane_width": 3.5,
        "turn_radius": 8.0,
        "entry_distance_left": 30.0,
        "entry_distance_straight": 30.0,
    }, indent=2) + "\n")
    (out / "sim.json").write_text(json.dumps({
        "v0_left": 4.0,
        "v0_straight": 7.0,
        "hv_policy": {"kind": "scripted", "profile": "conservative",
                      "desired_speed": 8.0},
        "timeout": 40.0,
    }, indent=2) + "\n")
    print(f"demo workspace ready in ./demo ({time.time() - t0:.0f}s)")


if __name__ == "__main__":
    main()
