"""Command line entry point.

    livetx repl  [--load file.st ...] [--script file.txns ...]
    livetx test  [pattern] [--view tag ...] [--load file.st ...]
    livetx bench --variant call|state [--txns 0..9] [--iterations N]
                 [--reps R] [--out table.csv]
    livetx demo  <name> [--steps N] [--snapshot-every K] [--persons N]
                 [--seed N] [--rate N]
    livetx serve --serve host:port [--load file.st ...]
"""

from __future__ import annotations

import argparse
import json
import sys

from ..world import World
from . import bench as benchmod
from . import demos as demosmod
from . import repl as replmod
from . import scripts as scriptsmod
from . import testrun


def _world_from(args) -> World:
    world = World()
    for path in getattr(args, "load", None) or ():
        with open(path, encoding="utf-8") as fh:
            report = world.load_program(fh.read(), filename=path)
        for err in report.errors:
            print(f"{path}: {err}", file=sys.stderr)
        if not report.ok:
            raise SystemExit(1)
    for path in getattr(args, "script", None) or ():
        scriptsmod.import_script_file(world, path)
    return world


def _cmd_repl(args):
    session = replmod.ReplSession(_world_from(args))
    replmod.main_loop(session)
    return 0


def _cmd_test(args):
    world = _world_from(args)
    report = testrun.run_tests(world, pattern=args.pattern or "",
                               view=args.view or ())
    print(report.format())
    return 0 if report.ok else 1


def _cmd_bench(args):
    txns = benchmod.parse_txn_counts(args.txns)

    def progress(row):
        print(f"  {args.variant} txns={row.txn_count}: "
              f"{row.median_ms:.1f} ms ({row.slowdown:.2f}x)",
              file=sys.stderr)

    result = benchmod.run_variant(
        args.variant, txn_counts=txns, iterations=args.iterations,
        reps=args.reps, on_progress=progress)
    print(result.format_table())
    if args.out:
        benchmod.write_csv(result, args.out)
        print(f"wrote {args.out}", file=sys.stderr)
    return 0


def _cmd_demo(args):
    world = World()
    handle = demosmod.start_demo(world, args.name, persons=args.persons,
                                 seed=args.seed, rate=args.rate)
    every = max(1, args.snapshot_every)
    done = 0
    while done < args.steps:
        chunk = min(every, args.steps - done)
        handle.advance(chunk)
        done += chunk
        print(json.dumps(handle.snapshot()))
        if not handle.running:
            break
    handle.stop()
    return 0


def _cmd_serve(args):
    from ..service.app import serve
    host, _, port = args.serve.partition(":")
    world = _world_from(args)
    serve(world, host=host or "127.0.0.1", port=int(port or 8000))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="livetx",
        description="a live image whose edits are scoped transactions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("repl", help="interactive session")
    p.add_argument("--load", action="append", metavar="FILE.ST")
    p.add_argument("--script", action="append", metavar="FILE.TXNS")
    p.set_defaults(run=_cmd_repl)

    p = sub.add_parser("test", help="run *Test classes")
    p.add_argument("pattern", nargs="?", default="")
    p.add_argument("--view", action="append", metavar="TAG",
                   help="stage these transactions over the global stack")
    p.add_argument("--load", action="append", metavar="FILE.ST")
    p.add_argument("--script", action="append", metavar="FILE.TXNS")
    p.set_defaults(run=_cmd_test)

    p = sub.add_parser("bench", help="dispatch and field cost sweep")
    p.add_argument("--variant", choices=("call", "state"), default="call")
    p.add_argument("--txns", default="0..9", metavar="K|A..B|A,B,C")
    p.add_argument("--iterations", type=int,
                   default=benchmod.DEFAULT_ITERATIONS)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--out", metavar="FILE.CSV")
    p.set_defaults(run=_cmd_bench)

    p = sub.add_parser("demo", help="run a bundled simulation headless")
    p.add_argument("name", choices=("bouncing-ball", "ball", "disease"))
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--snapshot-every", type=int, default=10)
    p.add_argument("--persons", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--rate", type=int, default=600)
    p.set_defaults(run=_cmd_demo)

    p = sub.add_parser("serve", help="HTTP interface over one world")
    p.add_argument("--serve", default="127.0.0.1:8000", metavar="HOST:PORT")
    p.add_argument("--load", action="append", metavar="FILE.ST")
    p.add_argument("--script", action="append", metavar="FILE.TXNS")
    p.set_defaults(run=_cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.run(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
