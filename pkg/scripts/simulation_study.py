"""Closed-loop safety and efficiency study: expert engine vs global baseline.

Learns a library from synthetic populations, then runs seeded episode
batches against the scripted straight-vehicle profiles with identical
seeds for both engines and prints the metric summaries side by side.

Usage: python scripts/simulation_study.py [--episodes N] [--seed S]
"""

import argparse
import time
from dataclasses import replace

from socialgame.expert import GAConfig, ga_optimize, learn_library
from socialgame.game import PayoffParams
from socialgame.simulator import (
    BatchRandomization,
    ScriptedPolicy,
    SimConfig,
    run_batch,
    summarize_metrics,
)
from socialgame.synth import synth_mixed_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=150)
    parser.add_argument("--seed", type=int, default=5)
    args = parser.parse_args()

    params = PayoffParams()
    t0 = time.time()
    events = synth_mixed_dataset(80, seed=args.seed, params=params)
    ga = GAConfig(population=64, generations=200, seed=args.seed, tol=0.02, patience=30)
    library = learn_library(events, ga, params)
    library.global_entry = ga_optimize(
        events, replace(ga, seed=args.seed + 104729), params, allow_mixed_categories=True
    )
    print(f"library learned in {time.time() - t0:.0f}s")

    config = SimConfig(hv_policy=ScriptedPolicy(profile="conservative"))
    baseline_cfg = replace(config, engine=library.global_entry.apply_to(config.engine))
    scenarios = {
        "conservative": BatchRandomization(),
        "profile mix": BatchRandomization(
            profiles=("aggressive", "conservative", "oscillating")
        ),
    }
    for name, randomize in scenarios.items():
        t0 = time.time()
        expert = run_batch(config, args.episodes, args.seed + 1000,
                           library=library, randomize=randomize)
        base = run_batch(baseline_cfg, args.episodes, args.seed + 1000,
                         library=None, randomize=randomize)
        print(f"\n=== {name} ({args.episodes} episodes, {time.time() - t0:.0f}s)")
        for label, metrics in (("expert", expert), ("baseline", base)):
            summary = summarize_metrics(metrics)
            print(
                f"{label:<9} collisions={summary['collisions']:<3} "
                f"severe={summary['severe_conflicts']:<3} "
                f"pet_median={summary['pet_median'] and round(summary['pet_median'], 2)} "
                f"transit_av={summary['transit_av_mean'] and round(summary['transit_av_mean'], 2)} "
                f"consistency={summary['consistency_rate'] and round(summary['consistency_rate'], 2)}"
            )


if __name__ == "__main__":
    main()
