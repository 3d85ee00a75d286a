"""Command-line entry point: ``sigscope <stage> [options]``."""

import argparse
import logging
import sys

from . import pipeline
from .config import build_config, load_config_file
from .exceptions import ConfigError, SigscopeError

log = logging.getLogger("sigscope")


def _common_options():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("data")
    g.add_argument("--config", help="TOML file with default settings; flags override it")
    g.add_argument("--input", help="volume CSV, one period per row: label,v1,...,vm")
    g.add_argument("--speed", help="optional speed CSV with the same shape and labels")
    g.add_argument("--samples-per-period", type=int)
    g.add_argument("--min-value", type=float)
    g.add_argument("--max-value", type=float)
    g.add_argument("--max-violations", type=int)
    g.add_argument("--speed-min-value", type=float)
    g.add_argument("--speed-max-value", type=float)
    g.add_argument("--speed-max-violations", type=int)
    g = p.add_argument_group("analysis")
    g.add_argument("--harmonics", help="comma-separated spectrum indices (0 = offset)")
    g.add_argument("--standardize", action="store_true", default=None,
                   help="z-score signature components before embedding")
    g.add_argument("--clusters", help="cluster CSV: label,cluster_id")
    g.add_argument("--kmeans", type=int, metavar="K", help="fallback: k-means with K clusters")
    g.add_argument("--seed", type=int)
    g.add_argument("--alpha", type=float, help="significance level (default 0.05)")
    g.add_argument("--max-degree", type=int)
    g.add_argument("--r2-threshold", type=float)
    g.add_argument("--out", help="output directory (default ./out)")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def make_parser():
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="sigscope",
        description="Power-spectrum signatures, 2-D MDS projection and potential-outlier characterization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="filter periods and write filtered.csv")
    sub.add_parser("sign", parents=[common], help="write signatures.csv")
    sub.add_parser("embed", parents=[common], help="write embedding.csv")
    sub.add_parser("fit", parents=[common], help="write fits.json")
    sub.add_parser("classify", parents=[common], help="write report.json")
    sub.add_parser("render", parents=[common], help="write plot.svg")
    run = sub.add_parser("run", parents=[common], help="run the whole pipeline")
    run.add_argument("--from-stage", choices=pipeline.STAGES, default="sign",
                     help="resume from this stage using artifacts already in --out")
    return parser


_NEEDS = {
    "ingest": (True, False),
    "sign": (True, False),
    "embed": (False, True),
    "fit": (False, False),
    "classify": (False, False),
    "render": (False, False),
}


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    stage = "config"
    try:
        file_values = load_config_file(args.config) if args.config else {}
        overrides = {k: v for k, v in vars(args).items() if k not in {"config", "command", "verbose", "from_stage"}}
        try:
            config = build_config(file_values, overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if args.command == "run":
            pipeline.run_pipeline(config, args.from_stage)
        else:
            needs_input, needs_clusters = _NEEDS[args.command]
            config.validate(needs_input=needs_input, needs_clusters=needs_clusters)
            stage = args.command
            if args.command == "ingest":
                _, rejected = pipeline.run_ingest(config)
                if rejected:
                    log.warning("rejected periods: %s", ", ".join(rejected))
            else:
                pipeline.run_stage(args.command, config)
    except SigscopeError as exc:
        print(f"sigscope [{getattr(exc, 'stage', stage)}] error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"sigscope [{getattr(exc, 'stage', stage)}] error: missing file {exc.filename}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
