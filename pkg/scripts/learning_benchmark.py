"""Per-tendency experts versus one global fit on synthetic populations.

Synthesizes three labeled populations with distinct generating
coefficients, calibrates one expert per category plus a single global
model on the union, and reports the loss table and per-generation traces.

Usage: python scripts/learning_benchmark.py [--events-per-category N]
       [--seed S] [--out-dir DIR]
"""

import argparse
import csv
import time
from dataclasses import replace
from pathlib import Path

from socialgame.expert import (
    GAConfig,
    evaluate_loss_matrix,
    ga_optimize,
    learn_library,
    precompute_features,
)
from socialgame.game import PayoffParams
from socialgame.orientation import TendencyCategory
from socialgame.synth import synth_mixed_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--events-per-category", type=int, default=80)
    parser.add_argument("--seed", type=int, default=5)
    parser.add_argument("--out-dir", default="benchmark-out")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = PayoffParams()

    t0 = time.time()
    events = synth_mixed_dataset(args.events_per_category, seed=args.seed, params=params)
    print(f"synthesized {len(events)} events in {time.time() - t0:.1f}s")

    ga = GAConfig(population=64, generations=200, seed=args.seed, tol=0.02, patience=30)
    traces: dict = {}
    t0 = time.time()
    library = learn_library(events, ga, params, traces=traces)
    global_trace: list = []
    global_fit = ga_optimize(
        events, replace(ga, seed=args.seed + 104729), params,
        allow_mixed_categories=True, trace_out=global_trace,
    )
    traces["global"] = global_trace
    print(f"calibrated in {time.time() - t0:.1f}s")

    with open(out_dir / "loss_traces.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "generation", "best_loss"])
        for key, trace in traces.items():
            name = getattr(key, "value", key)
            for gen, loss in enumerate(trace):
                writer.writerow([name, gen, repr(loss)])

    print(f"\n{'category':<12} {'expert':>8} {'global':>8}")
    total = 0.0
    for cat in TendencyCategory:
        part = [ev for ev in events if ev.category is cat]
        feats = precompute_features(part, params)
        global_loss = float(
            evaluate_loss_matrix(global_fit.coefficient_vector().reshape(1, -1), feats)[0]
        )
        expert_loss = library.entries[cat].loss
        total += expert_loss * len(part)
        print(f"{cat.value:<12} {expert_loss:>8.4f} {global_loss:>8.4f}")
    print(f"{'overall':<12} {total / len(events):>8.4f} {global_fit.loss:>8.4f}")
    print(f"\ntraces written to {out_dir / 'loss_traces.csv'}")


if __name__ == "__main__":
    main()
