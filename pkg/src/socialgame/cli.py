"""Command-line entry point.

Subcommands cover the full pipeline: orientation analysis, single-game
solving, trajectory ingestion, expert learning, prediction and timing
evaluation, batch simulation, and the live session server.  Every run
writes a manifest (inputs, outputs, hashes, seeds) next to its primary
output; outputs themselves carry no timestamps, so re-running a command
with the same arguments reproduces them byte for byte.
"""

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .evaluate import accuracy_report, decision_timing, predict_events
from .events import load_events, save_events
from .expert import (
    EmptyDataset,
    GAConfig,
    LibraryFormatError,
    SchemaVersionMismatch,
    ga_optimize,
    learn_library,
    load_library,
    lookup,
    save_library,
)
from .game import AgentState, PayoffParams, build_payoff_matrix, decide
from .geometry import GeometryError, IntersectionConfig, IntersectionGeometry, load_geometry
from .ingest import IngestError, extract_events, parse_trajectories
from .nash import DegenerateGame, solve_mixed_nash
from .orientation import OrientationConfig, TendencyCategory, io_series
from .simulator import (
    BatchRandomization,
    ReactivePolicy,
    ScriptedPolicy,
    SimConfig,
    run_batch,
    save_episode_log,
    summarize_metrics,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class ValidationFailure(ValueError):
    pass


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(command: str, argv: list, inputs: list, outputs: list, extra: dict):
    """One manifest per run, stored next to the primary output."""
    if not outputs:
        return
    primary = Path(outputs[0])
    manifest = {
        "command": command,
        "argv": list(argv),
        "version": __version__,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if Path(p).exists()},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs if Path(p).exists()},
        "started": extra.pop("_started", None),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        **extra,
    }
    with open(primary.with_suffix(primary.suffix + ".manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _load_params(path: str | None) -> PayoffParams:
    if path is None:
        return PayoffParams()
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValidationFailure("engine params file must hold a JSON object")
    known = {f.name for f in dataclasses.fields(PayoffParams)}
    unknown = set(doc) - known
    if unknown:
        raise ValidationFailure(f"unknown engine parameter keys: {sorted(unknown)}")
    for key in ("a_proceed", "a_yield", "v_bounds_left", "v_bounds_straight"):
        if key in doc:
            doc[key] = tuple(doc[key])
    return PayoffParams(**doc)


def _geometry_from_arg(path: str | None) -> IntersectionGeometry:
    if path is None:
        return IntersectionGeometry()
    return load_geometry(path)


# -- io-analyze --------------------------------------------------------------


def cmd_io_analyze(args, argv) -> int:
    from .orientation import _itsi_at  # analysis output shares the indicator math

    events = load_events(args.events)
    if args.event_id is not None:
        events = [ev for ev in events if ev.event_id == args.event_id]
        if not events:
            raise ValidationFailure(f"no event with id {args.event_id!r}")
    config = OrientationConfig()
    out = Path(args.out)
    with open(out, "w") as fh:
        fh.write("t,itsi,s_norm,io,delta_ttcp,a_c\n")
        for ev in events:
            snaps = ev.snapshots()
            if args.subject == "left":
                snaps = [s.swapped() for s in snaps]
            samples = io_series(snaps, config)
            for snap, sample in zip(snaps, samples):
                _, dttcp, a_c = _itsi_at(snap, config)
                a_c_txt = "" if np.isnan(a_c) else repr(a_c)
                fh.write(
                    f"{_fmt(sample.t)},{_fmt(sample.itsi)},{_fmt(sample.s_norm)},"
                    f"{_fmt(sample.io)},{_fmt(dttcp)},{a_c_txt}\n"
                )
    print(f"wrote {out} ({sum(len(ev.t) for ev in events)} frames, "
          f"{len(events)} events, subject={args.subject})")
    _write_manifest("io-analyze", argv, [args.events], [out], {"subject": args.subject})
    return EXIT_OK


# -- solve -------------------------------------------------------------------


def cmd_solve(args, argv) -> int:
    with open(args.scenario) as fh:
        doc = json.load(fh)
    try:
        left = AgentState(d=float(doc["left"]["d"]), v=float(doc["left"]["v"]))
        straight = AgentState(d=float(doc["straight"]["d"]), v=float(doc["straight"]["v"]))
    except (KeyError, TypeError) as exc:
        raise ValidationFailure(f"scenario must define left/straight d and v ({exc})")
    params = PayoffParams(**{
        k: (tuple(v) if isinstance(v, list) else v)
        for k, v in doc.get("params", {}).items()
    })
    if args.library:
        library = load_library(args.library)
        category = TendencyCategory(doc.get("category", "ambiguous"))
        expert, fallback = lookup(library, category)
        params = expert.apply_to(params)
    seed = doc.get("seed", args.seed)
    game = build_payoff_matrix((left, straight), params, rng=seed)
    profile = solve_mixed_nash(game)
    decisions = {
        "left": decide(profile, "left"),
        "straight": decide(profile, "straight"),
    }
    result = {
        "u_l": [list(row) for row in game.u_l],
        "u_s": [list(row) for row in game.u_s],
        "p_l": list(profile.p_l),
        "p_s": list(profile.p_s),
        "decisions": decisions,
        "seed": seed,
    }
    print("payoff matrix (left):    ", game.u_l)
    print("payoff matrix (straight):", game.u_s)
    print(f"equilibrium: p_l={profile.p_l} p_s={profile.p_s}")
    print(f"decisions: left={decisions['left']} straight={decisions['straight']}")
    outputs = []
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
        outputs.append(args.out)
        _write_manifest("solve", argv, [args.scenario], outputs, {"seed": seed})
    return EXIT_OK


# -- ingest ------------------------------------------------------------------


def cmd_ingest(args, argv) -> int:
    geometry = _geometry_from_arg(args.geometry)
    tracks, row_report = parse_trajectories(args.csv)
    events, event_report = extract_events(tracks, geometry)
    save_events(events, args.out)
    for line in row_report + event_report:
        print(f"note: {line}", file=sys.stderr)
    print(f"parsed {len(tracks)} tracks -> {len(events)} events "
          f"({len(row_report)} malformed rows, {len(event_report)} skipped pairs)")
    inputs = [args.csv] + ([args.geometry] if args.geometry else [])
    _write_manifest("ingest", argv, inputs, [args.out],
                    {"tracks": len(tracks), "events": len(events)})
    return EXIT_OK


# -- learn -------------------------------------------------------------------


def cmd_learn(args, argv) -> int:
    events = load_events(args.data)
    if not events:
        raise ValidationFailure("no events in the data file")
    ga = GAConfig(
        population=args.population,
        generations=args.generations,
        seed=args.seed,
        tol=args.tol,
    )
    params = _load_params(args.engine)
    traces: dict = {}
    library = learn_library(events, ga, params, traces=traces)
    if not args.no_global:
        trace: list = []
        library.global_entry = ga_optimize(
            events, dataclasses.replace(ga, seed=args.seed + 104729),
            params, allow_mixed_categories=True, trace_out=trace,
        )
        traces["global"] = trace
    save_library(library, args.out)
    outputs = [args.out]
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("model,generation,best_loss\n")
            for key, trace in sorted(
                traces.items(), key=lambda kv: getattr(kv[0], "value", "zzz-global")
            ):
                name = getattr(key, "value", "global")
                for gen, loss in enumerate(trace):
                    fh.write(f"{name},{gen},{_fmt(loss)}\n")
        outputs.append(args.trace)
    named = [(cat.value, entry) for cat, entry in library.entries.items()]
    if library.global_entry is not None:
        named.append(("global", library.global_entry))
    for name, entry in named:
        print(f"{name}: loss={entry.loss:.4f} converged={entry.converged} "
              f"generations={entry.generations}")
    _write_manifest("learn", argv, [args.data], outputs, {"seed": args.seed})
    return EXIT_OK


# -- predict / eval ------------------------------------------------------------


def _library_global(library):
    return library.global_entry


def cmd_predict(args, argv) -> int:
    events = load_events(args.events)
    if not events:
        raise ValidationFailure("no events to predict")
    library = load_library(args.library)
    params = _load_params(args.engine)
    if args.baseline:
        baseline = _library_global(library)
        if baseline is None:
            raise ValidationFailure("library has no global entry for --baseline")
        preds = predict_events(events, None, params, baseline=baseline)
    else:
        preds = predict_events(events, library, params)
    report = accuracy_report(preds)
    with open(args.out, "w") as fh:
        fh.write("event_id,label_l,predicted_l,mean_p_l,mean_p_s,correct\n")
        for p in preds:
            fh.write(
                f"{p.event_id},{p.label_l},{p.predicted_label_l},"
                f"{_fmt(p.mean_p_l)},{_fmt(p.mean_p_s)},{int(p.correct)}\n"
            )
    for name, row in report.items():
        acc = "n/a" if row["accuracy"] is None else f"{row['accuracy']:.1%}"
        print(f"{name}: {row['correct']}/{row['events']} ({acc})")
    _write_manifest("predict", argv, [args.events, args.library], [args.out],
                    {"baseline": bool(args.baseline), "report": report})
    return EXIT_OK


def cmd_eval(args, argv) -> int:
    events = load_events(args.events)
    if not events:
        raise ValidationFailure("no events to evaluate")
    library = load_library(args.library)
    params = _load_params(args.engine)
    expert_preds = predict_events(events, library, params)
    expert_dists, expert_mean = decision_timing(expert_preds, events)
    baseline = _library_global(library)
    base_dists, base_mean = [None] * len(events), None
    if baseline is not None:
        base_preds = predict_events(events, None, params, baseline=baseline)
        base_dists, base_mean = decision_timing(base_preds, events)
    with open(args.out, "w") as fh:
        fh.write("event_id,label_l,expert_distance,baseline_distance\n")
        for ev, d_e, d_b in zip(events, expert_dists, base_dists):
            fh.write(f"{ev.event_id},{ev.label_l},{_fmt(d_e)},{_fmt(d_b)}\n")
    print(f"expert mean decision distance: "
          f"{'n/a' if expert_mean is None else f'{expert_mean:.2f} m'}")
    if baseline is not None:
        print(f"baseline mean decision distance: "
              f"{'n/a' if base_mean is None else f'{base_mean:.2f} m'}")
    _write_manifest("eval", argv, [args.events, args.library], [args.out],
                    {"expert_mean": expert_mean, "baseline_mean": base_mean})
    return EXIT_OK


# -- simulate ----------------------------------------------------------------


def _sim_config_from_file(path: str | None) -> SimConfig:
    if path is None:
        return SimConfig()
    with open(path) as fh:
        doc = json.load(fh)
    geometry = IntersectionConfig(**doc.get("geometry", {}))
    policy_doc = doc.get("hv_policy", {})
    kind = policy_doc.get("kind", "scripted")
    if kind == "scripted":
        policy = ScriptedPolicy(
            profile=policy_doc.get("profile", "conservative"),
            desired_speed=policy_doc.get("desired_speed", 8.0),
        )
    elif kind == "reactive":
        policy = ReactivePolicy(
            desired_speed=policy_doc.get("desired_speed", 8.0),
            comfort_decel=policy_doc.get("comfort_decel", -2.0),
            gap_threshold=policy_doc.get("gap_threshold", 1.5),
        )
    else:
        raise ValidationFailure(f"unknown hv_policy kind {kind!r}")
    engine_doc = {
        k: (tuple(v) if isinstance(v, list) else v)
        for k, v in doc.get("engine", {}).items()
    }
    fields = {
        k: doc[k]
        for k in ("v0_left", "v0_straight", "s0_left", "s0_straight",
                  "decision_period", "dt", "timeout", "decision_threshold")
        if k in doc
    }
    return SimConfig(
        geometry=geometry,
        hv_policy=policy,
        engine=PayoffParams(**engine_doc),
        **fields,
    )


def cmd_simulate(args, argv) -> int:
    config = _sim_config_from_file(args.config)
    library = load_library(args.library) if args.library else None
    if args.baseline:
        if library is None:
            raise ValidationFailure("--baseline needs --library with a global entry")
        baseline = _library_global(library)
        if baseline is None:
            raise ValidationFailure("library has no global entry for --baseline")
        config = dataclasses.replace(config, engine=baseline.apply_to(config.engine))
        library = None
    randomize = None
    if args.randomize:
        profiles = None
        if isinstance(config.hv_policy, ScriptedPolicy) and config.hv_policy.profile == "mix":
            profiles = ("aggressive", "conservative", "oscillating")
            config = dataclasses.replace(
                config, hv_policy=dataclasses.replace(config.hv_policy, profile="conservative")
            )
        randomize = BatchRandomization(profiles=profiles)
    log_sink = None
    if args.logs:
        logs_dir = Path(args.logs)
        logs_dir.mkdir(parents=True, exist_ok=True)

        def log_sink(index, log):
            save_episode_log(log, logs_dir / f"episode-{index:04d}.jsonl")

    metrics = run_batch(config, args.episodes, args.seed, library, randomize, log_sink)
    with open(args.out, "w") as fh:
        fh.write("seed,terminal,transit_av,transit_hv,combined,pet,"
                 "collision,severe_conflict,consistency\n")
        for m in metrics:
            fh.write(
                f"{m.seed},{m.terminal_reason},{_fmt(m.transit_av)},{_fmt(m.transit_hv)},"
                f"{_fmt(m.combined)},{_fmt(m.pet)},{int(m.collision)},"
                f"{int(m.severe_conflict)},"
                f"{'' if m.decision_consistency is None else int(m.decision_consistency)}\n"
            )
    summary = summarize_metrics(metrics)
    for key, value in summary.items():
        print(f"{key}: {value}")
    outputs = [args.out]
    inputs = [p for p in (args.config, args.library) if p]
    _write_manifest("simulate", argv, inputs, outputs,
                    {"seed": args.seed, "episodes": args.episodes, "summary": summary})
    return EXIT_OK


# -- serve -------------------------------------------------------------------


def cmd_serve(args, argv) -> int:
    from .service import run_server

    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValidationFailure("--addr must look like HOST:PORT")
    library = load_library(args.library) if args.library else None
    config = _sim_config_from_file(args.config)
    run_server(host, int(port), library, config, paced=not args.unpaced)
    return EXIT_OK


# -- rerun -------------------------------------------------------------------


def cmd_rerun(args, argv) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    recorded = manifest.get("argv")
    if not recorded:
        raise ValidationFailure("manifest records no argv")
    print(f"re-running: socialgame {' '.join(recorded)}", file=sys.stderr)
    return main(recorded)


# -- wiring ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socialgame",
        description="Socially-aware intersection decision pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("io-analyze", help="per-frame orientation CSV for events")
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--subject", choices=("straight", "left"), default="straight")
    p.add_argument("--event-id")
    p.set_defaults(func=cmd_io_analyze)

    p = sub.add_parser("solve", help="solve one scenario's game")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.add_argument("--library")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ingest", help="trajectory CSV -> labeled events")
    p.add_argument("--csv", required=True)
    p.add_argument("--geometry")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("learn", help="GA calibration of the expert library")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--population", type=int, default=64)
    p.add_argument("--generations", type=int, default=200)
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--trace", help="per-generation loss CSV")
    p.add_argument("--engine", help="engine parameter JSON")
    p.add_argument("--no-global", action="store_true",
                   help="skip the unpartitioned baseline fit")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("predict", help="event-level decision prediction report")
    p.add_argument("--events", required=True)
    p.add_argument("--library", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--engine")
    p.add_argument("--baseline", action="store_true",
                   help="use the library's global entry without tendency lookup")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="decision-timing report (expert vs global)")
    p.add_argument("--events", required=True)
    p.add_argument("--library", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--engine")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="seeded batch episodes with metrics")
    p.add_argument("--config")
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--logs", help="directory for per-episode JSONL logs")
    p.add_argument("--library")
    p.add_argument("--baseline", action="store_true")
    p.add_argument("--randomize", action="store_true",
                   help="randomize initial speeds (and profiles for 'mix')")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="live WebSocket session server")
    p.add_argument("--addr", required=True)
    p.add_argument("--library")
    p.add_argument("--config")
    p.add_argument("--unpaced", action="store_true",
                   help="lockstep ticks (one step per control message)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("rerun", help="re-execute a command from its manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except (ValidationFailure, GeometryError, IngestError, EmptyDataset,
            SchemaVersionMismatch, LibraryFormatError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DegenerateGame, RuntimeError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
