"""Command-line entry point: ``qrlsim {run,aggregate,plot,oracle}``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError, MapParseError
from .gridworld import bfs_shortest, follow_policy, greedy_actions, read_map, value_iteration
from .plotting import emit_learning_curve_svg

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("qrlsim")


def _load_map_or_config_error(path):
    try:
        return read_map(path)
    except (OSError, MapParseError) as exc:
        raise ConfigError(f"cannot load map {path}: {exc}") from exc


def cmd_run(args) -> int:
    cfg = harness.load_config(args.config) if args.config else harness.ExperimentConfig()
    cfg = harness.with_overrides(
        cfg,
        agent=args.agent,
        map=args.map,
        episodes=args.episodes,
        seeds=(args.seed,) if args.seed is not None else None,
        out=args.out,
    )
    world = cfg.load_world()
    out = Path(cfg.out)
    summaries = harness.run_experiment(cfg, jobs=args.jobs)
    agg = harness.aggregate(summaries)
    harness.emit_csv(summaries, out / "runs.csv")
    harness.emit_summary_csv(summaries, out / "summary.csv")
    harness.emit_aggregate_csv(agg, out / "aggregate.csv")
    harness.emit_convergence_csv(agg, out / "convergence.csv")
    if not args.no_plot:
        emit_learning_curve_svg(agg, out / "learning_curve.svg", log_x=cfg.log_x,
                                oracle=bfs_shortest(world))
    sys.stdout.write(harness.format_table(agg))
    log.info("wrote results to %s", out)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    world = _load_map_or_config_error(args.map) if args.map else None
    summaries = harness.read_runs_csv(args.runs, world, args.window)
    agg = harness.aggregate(summaries)
    out = Path(args.out)
    harness.emit_aggregate_csv(agg, out / "aggregate.csv")
    if world is not None:
        harness.emit_convergence_csv(agg, out / "convergence.csv")
    sys.stdout.write(harness.format_table(agg))
    return EXIT_OK


def cmd_plot(args) -> int:
    agg = harness.read_aggregate_csv(args.aggregate)
    oracle = bfs_shortest(_load_map_or_config_error(args.map)) if args.map else None
    emit_learning_curve_svg(agg, args.out, log_x=args.log_x, stat=args.stat, oracle=oracle)
    return EXIT_OK


def cmd_oracle(args) -> int:
    world = _load_map_or_config_error(args.map)
    V = value_iteration(world, args.gamma)
    length = bfs_shortest(world)
    greedy = follow_policy(world, greedy_actions(world, V, args.gamma))
    print(f"map\t{args.map}")
    print(f"size\t{world.width}x{world.height}")
    print(f"bfs_shortest\t{length}")
    print(f"greedy_path_length\t{greedy}")
    print(f"v_star_start\t{V[world.start_index]:.10g}")
    if args.values:
        grid = V.reshape(world.height, world.width)
        for row in grid:
            print("\t".join(f"{v:.4f}" for v in row))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qrlsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment sweep")
    r.add_argument("--config", type=Path)
    r.add_argument("--out", help="output directory (overrides config)")
    r.add_argument("--seed", type=int, help="run this single seed instead of the config's list")
    r.add_argument("--agent", choices=harness.AGENTS)
    r.add_argument("--map", help="map file or bundled map name")
    r.add_argument("--episodes", type=int)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--no-plot", action="store_true")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("aggregate", help="aggregate a runs.csv across seeds")
    a.add_argument("--runs", type=Path, required=True)
    a.add_argument("--map", help="map the runs used; enables convergence statistics")
    a.add_argument("--window", type=int, default=100)
    a.add_argument("--out", default=".")
    a.set_defaults(func=cmd_aggregate)

    pl = sub.add_parser("plot", help="render an aggregate.csv as an SVG learning curve")
    pl.add_argument("--aggregate", type=Path, required=True)
    pl.add_argument("--out", type=Path, default=Path("learning_curve.svg"))
    pl.add_argument("--map", help="draw the shortest-path length as a reference line")
    pl.add_argument("--stat", default="median", choices=("mean", "median", "min", "max"))
    pl.add_argument("--log-x", action="store_true")
    pl.set_defaults(func=cmd_plot)

    o = sub.add_parser("oracle", help="print BFS shortest path and V* for a map")
    o.add_argument("--map", required=True)
    o.add_argument("--gamma", type=float, default=0.99)
    o.add_argument("--values", action="store_true", help="also print the V* grid")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
