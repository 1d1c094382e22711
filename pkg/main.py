"""
main.py - Main Entry Point for the Spin-Torus Dirac Solver

Command-line interface: one subcommand per experiment, a JSON config file,
repeatable key.path=value overrides and an output directory.
"""

import argparse
import logging
import sys
from typing import List, Optional

from errors import ConfigurationError, SdafError
from modules import EXIT_ERROR, EXPERIMENT_KINDS, apply_overrides, config_from_dict, execute, load_config

logger = logging.getLogger("sdaf")

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


# =============================================================================
# ARGUMENT PARSING
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdaf",
        description="Perturbed alpha-Dirac-harmonic maps from flat spin tori: "
                    "solvers, continuation and diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, kind in EXPERIMENT_KINDS.items():
        p = sub.add_parser(command, help=f"run the {kind} experiment")
        p.add_argument("--config", help="JSON experiment file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="random seed (overrides seed)")
        p.add_argument("--override", action="append", default=[], metavar="KEY.PATH=VALUE",
                       help="set a config value; VALUE is parsed as JSON (repeatable)")
        p.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    return parser


def _config_from_args(args: argparse.Namespace):
    kind = EXPERIMENT_KINDS[args.command]
    if args.config:
        return load_config(args.config, args.override, experiment=kind, seed=args.seed, output_dir=args.out)
    raw = apply_overrides({}, args.override)
    raw['experiment'] = kind
    if args.seed is not None:
        raw['seed'] = args.seed
    if args.out is not None:
        raw['output_dir'] = args.out
    return config_from_dict(raw)


# =============================================================================
# MAIN
# =============================================================================

def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run the experiment and return the exit status:
    0 on PASS (or NOT-APPLICABLE), 2 on FAIL, 1 on errors.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        config = _config_from_args(args)
        outcome = execute(config)
    except ConfigurationError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_ERROR
    except SdafError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR
    except Exception:
        logger.exception("unexpected error")
        return EXIT_ERROR
    print(f"{config.experiment}: {outcome.report.verdict} (outputs in {config.output_dir})")
    return outcome.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
