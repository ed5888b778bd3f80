"""Command-line entry point: `ehlab run --config f.json`, `ehlab plot --manifest m.json`.

Exit codes: 0 success, 2 configuration error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigurationError, NumericError
from .harness import ExperimentConfig, emit_plot_scripts, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ehlab",
                                     description="mixed-dynamics experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_plot = sub.add_parser("plot", help="emit plot scripts for a finished run")
    p_plot.add_argument("--manifest", required=True, help="run manifest JSON")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            manifest = run(ExperimentConfig.from_file(args.config))
            print(manifest["manifest_path"])
        else:
            for script in emit_plot_scripts(args.manifest):
                print(script)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
