"""Command-line interface: benchmark runs, replays, rendering, serving."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .harness import run_batch, write_metrics_csv
from .replay import CorruptReplayError, replay_verify
from .scenarios import UnknownScenarioError, scenario_registry


def _cmd_list_scenarios(_args) -> int:
    rows = [("id", "challenge", "quads", "observers", "provisioners", "horizon", "targets")]
    for cfg in scenario_registry():
        rows.append(
            (
                cfg.id,
                cfg.challenge.value,
                str(cfg.n_quad),
                str(cfg.n_obs),
                str(cfg.n_prov),
                str(cfg.horizon),
                str(cfg.target_count),
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return 0


def _cmd_run(args) -> int:
    try:
        metrics, summary = run_batch(
            args.scenario,
            args.policy,
            args.episodes,
            args.seed,
            mode=args.mode,
            padded=args.padded,
            record_dir=args.record,
        )
    except UnknownScenarioError as exc:
        print(f"error: unknown scenario {exc}", file=sys.stderr)
        return 2
    for m in metrics:
        print(
            f"seed {m.seed}: return {m.team_return:.1f} "
            f"(reaches {m.reaches}, retrieves {m.retrieves}, "
            f"collisions {m.collision_steps}, oob {m.oob_steps}, {m.wall_time_s:.2f}s)"
        )
    print(
        f"{args.scenario} / {args.policy}: mean return {summary['mean_return']:.2f} "
        f"+/- {summary['std_return']:.2f} over {summary['episodes']} episodes, "
        f"95% CI [{summary['ci95_low']:.2f}, {summary['ci95_high']:.2f}]"
    )
    if args.out:
        write_metrics_csv(args.out, metrics)
        print(f"metrics written to {args.out}")
    if args.record:
        print(f"replays written to {args.record}")
    return 0


def _cmd_replay(args) -> int:
    if not args.verify:
        print("nothing to do (pass --verify)", file=sys.stderr)
        return 2
    try:
        ok = replay_verify(args.file)
    except CorruptReplayError as exc:
        print(f"corrupt replay: {exc}", file=sys.stderr)
        return 2
    print("replay OK" if ok else "replay FAILED verification")
    return 0 if ok else 1


def _cmd_render(args) -> int:
    from .render import render_frames

    try:
        frames = render_frames(args.file, args.out, args.every)
    except CorruptReplayError as exc:
        print(f"corrupt replay: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(frames)} frames to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    from .server import serve

    serve(args.bind, padded=args.padded)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hemac",
        description="Heterogeneous multi-agent simulation benchmark",
    )
    parser.add_argument("--version", action="version", version=f"hemac {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-scenarios", help="print the scenario registry").set_defaults(
        func=_cmd_list_scenarios
    )

    run = sub.add_parser("run", help="run a seeded benchmark batch")
    run.add_argument("--scenario", required=True)
    run.add_argument("--policy", choices=["heuristic", "random"], required=True)
    run.add_argument("--episodes", type=int, default=10)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--mode", choices=["discrete", "continuous"], default="discrete",
                     help="action mode used by the random policy")
    run.add_argument("--padded", action="store_true",
                     help="drive the episode through the homogenization layer")
    run.add_argument("--out", metavar="CSV", help="write per-episode metrics")
    run.add_argument("--record", metavar="DIR", help="write one replay per episode")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("replay", help="verify a recorded replay")
    rep.add_argument("--file", required=True)
    rep.add_argument("--verify", action="store_true")
    rep.set_defaults(func=_cmd_replay)

    ren = sub.add_parser("render", help="render replay frames to SVG files")
    ren.add_argument("--file", required=True)
    ren.add_argument("--out", required=True)
    ren.add_argument("--every", type=int, default=200, help="world steps between frames")
    ren.set_defaults(func=_cmd_render)

    srv = sub.add_parser("serve", help="run the rollout server")
    srv.add_argument("--bind", default="127.0.0.1:7521", metavar="ADDR:PORT")
    srv.add_argument("--padded", action="store_true",
                     help="sessions default to padded spaces")
    srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
