"""Command-line entry point: run, validate, ingest and report."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, harness
from .errors import ConfigError, ScaffoldError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    if args.output_dir:
        cfg.output_dir = Path(args.output_dir)
    records = harness.run_matrix(
        cfg, seed=args.seed, parallelism=args.parallelism,
        on_done=lambda r: print(harness.summary_line(r), flush=True),
    )
    failed = sum(1 for r in records if not r.completed)
    print(f"{len(records) - failed}/{len(records)} runs completed; records under {cfg.output_dir}")
    return EXIT_PARTIAL if failed else EXIT_OK


def _cmd_validate(args) -> int:
    cfg = harness.load_config(args.config)
    cells = cfg.cells()
    print(f"config ok: {len(cfg.projects)} projects x {len(cfg.processes)} processes x "
          f"{len(cfg.models)} models = {len(cells)} cells")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    record = harness.ingest(args.kind, args.file, args.runs)
    q = record.quality
    print(f"{record.run_id}: code_smells={q.code_smells} vulnerabilities={q.vulnerabilities} "
          f"human_bug_rate={q.human_bug_rate}")
    return EXIT_OK


def _cmd_report(args) -> int:
    for path in harness.report(args.runs, args.out):
        print(path)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors share the config-error exit status
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scaffoldlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute every cell of an experiment config")
    p.add_argument("config", help="experiment config (JSON or YAML)")
    p.add_argument("--seed", type=int, help="override the seed of every cell")
    p.add_argument("--parallelism", type=int, help="override the worker count")
    p.add_argument("--output-dir", help="override output_dir from the config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="check a config without running anything")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("ingest", help="attach static-analysis issues or a manual test session to a run")
    p.add_argument("kind", choices=("issues", "manual"))
    p.add_argument("file")
    p.add_argument("--runs", required=True, help="runs directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("report", help="write CSV and Markdown summaries over all runs")
    p.add_argument("--runs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "parallelism", None) is not None and args.parallelism < 1:
        parser.error("--parallelism must be positive")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScaffoldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
