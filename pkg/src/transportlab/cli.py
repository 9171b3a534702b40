"""Command-line entry point: ``transportlab run | list | describe``."""

import argparse
import sys

from .checks import REGISTRY, WORKERS_ENV
from .config import default_config_path, load_config
from .errors import ConfigError
from .report import execute, write_report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def cmd_list(out=sys.stdout):
    width = max(len(n) for n in REGISTRY)
    for entry in REGISTRY.values():
        print(f"{entry.name:<{width}}  {entry.kind:<10}  {entry.anchor}", file=out)
    return EXIT_OK


def cmd_describe(name, out=sys.stdout, err=sys.stderr):
    entry = REGISTRY.get(name)
    if entry is None:
        print(f"error: unknown check {name!r}; run 'transportlab list'", file=err)
        return EXIT_CONFIG
    print(f"{entry.name} ({entry.kind})", file=out)
    print(f"  {entry.anchor}", file=out)
    print(f"  asserts: {entry.statement}", file=out)
    if entry.requires:
        print(f"  requires: {', '.join(entry.requires)}", file=out)
    if entry.params:
        print("  parameters:", file=out)
        for key, doc in entry.params.items():
            print(f"    {key}: {doc}", file=out)
    else:
        print("  parameters: none", file=out)
    return EXIT_OK


def cmd_run(config_path=None, out_json=None, out_csv=None, workers=None, out=sys.stdout, err=sys.stderr):
    path = config_path or default_config_path()
    try:
        config = load_config(path)
        report = execute(config, workers=workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    json_path = out_json or config.output.get("json")
    csv_path = out_csv or config.output.get("csv")
    write_report(report, json_path, csv_path)
    for r in report.results:
        pair = r.params.get("pair", "")
        line = f"{r.status.upper():4}  {r.name:<14} {pair:<22} lhs={r.lhs:.10g} rhs={r.rhs:.10g} margin={r.margin:.3g}"
        if r.note:
            line += f"  ({r.note})"
        print(line, file=out)
    s = report.summary
    print(f"{s['passed']}/{s['total']} passed, {s['failed']} failed in {report.wall_time_s:.1f} s", file=out)
    return EXIT_OK if report.all_passed else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(prog="transportlab",
                                     description="Check transport-map inequalities and identities numerically.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a configured check suite and write reports")
    run.add_argument("--config", help="JSON run configuration (default: the bundled catalog)")
    run.add_argument("--out-json", help="JSON report path (overrides the config)")
    run.add_argument("--out-csv", help="CSV report path (overrides the config)")
    run.add_argument("--workers", type=int,
                     help=f"worker threads (default: ${WORKERS_ENV} or the available cores)")
    sub.add_parser("list", help="list the registered checks")
    desc = sub.add_parser("describe", help="show what a check asserts and its parameters")
    desc.add_argument("name")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return cmd_list()
    if args.command == "describe":
        return cmd_describe(args.name)
    return cmd_run(args.config, args.out_json, args.out_csv, args.workers)


if __name__ == "__main__":
    sys.exit(main())
