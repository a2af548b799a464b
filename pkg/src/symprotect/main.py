"""Main entry point for the symprotect command line."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .config import COMMANDS, apply_overrides, load_config
from .errors import ConfigError, SymprotectError
from .runner import ERROR_FILE, EXIT_FAILED, EXIT_OK, error_payload, exit_code_for, run, verify
from .utils import setup_logging, write_json

logger = logging.getLogger(__name__)


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="symprotect",
        description="symprotect - simulations of a symmetry-protected spin-chain qubit",
    )

    parser.add_argument("--version", action="version", version=f"symprotect {__version__}")

    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="INFO",
        help="Set logging level (default: INFO)",
    )

    parser.add_argument("--log-file", type=Path, help="Log file path (default: user config dir)")

    parser.add_argument("--no-console", action="store_true", help="Disable console logging")

    subparsers = parser.add_subparsers(dest="action", required=True)

    run_parser = subparsers.add_parser("run", help="Run one computation")
    run_parser.add_argument("command", choices=COMMANDS)
    run_parser.add_argument("--config", type=Path, help="JSON run configuration")
    run_parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="Dotted-path override, e.g. circuit.n_max=8 (repeatable)",
    )
    run_parser.add_argument("--seed", type=int, help="Master seed (run.master_seed)")
    run_parser.add_argument("--output-dir", type=Path, help="Output directory (run.output_dir)")
    run_parser.add_argument("--fidelity", choices=["full", "reduced"], help="run.fidelity")
    run_parser.add_argument("--M", type=int, help="Spin count (spin.M)")
    run_parser.add_argument(
        "--lambda-over-t", metavar="START:STOP:STEP",
        help="lambda/t grid for spin-scan, in units of spin.t_GHz",
    )

    verify_parser = subparsers.add_parser("verify", help="Rerun a golden bundle")
    verify_parser.add_argument("bundle", type=Path)
    verify_parser.add_argument("--config", type=Path, help="Base configuration for every case")
    verify_parser.add_argument("--output-dir", type=Path, help="Keep case outputs here")

    return parser.parse_args(argv)


def parse_ratio_grid(text: str, scale: float) -> dict:
    """'0:1.5:0.01' -> lambda axis in GHz for the given t."""
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError as e:
        raise ConfigError(f"--lambda-over-t needs START:STOP:STEP, got {text!r}", ["--lambda-over-t"]) from e
    return {"name": "lam", "start": start * scale, "stop": stop * scale, "step": step * scale}


def build_config(args: argparse.Namespace) -> dict:
    """Defaults, then --config, then --set, then the dedicated flags."""
    config = load_config(args.config)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"run.master_seed={args.seed}")
    if args.fidelity is not None:
        overrides.append(f'run.fidelity="{args.fidelity}"')
    if args.M is not None:
        overrides.append(f"spin.M={args.M}")
    if overrides:
        config = apply_overrides(config, overrides)
    if args.output_dir is not None:
        config["run"]["output_dir"] = str(args.output_dir)
    if args.lambda_over_t:
        config["spin_scan"]["axis1"] = parse_ratio_grid(args.lambda_over_t, config["spin"]["t_GHz"])
    return config


def main(argv: Optional[List[str]] = None) -> None:
    """Main command line entry point."""
    args = parse_arguments(argv)

    setup_logging(level=args.log_level, log_file=args.log_file, console=not args.no_console)

    logger.info(f"Starting symprotect v{__version__}")

    try:
        if args.action == "run":
            try:
                config = build_config(args)
            except SymprotectError as e:
                payload = error_payload(e)
                write_json(Path(args.output_dir or "results") / ERROR_FILE, payload)
                print(json.dumps(payload, sort_keys=True))
                sys.exit(exit_code_for(e))
            sys.exit(run(args.command, config, Path(config["run"]["output_dir"])))

        base_config = load_config(args.config)
        report = verify(args.bundle, base_config, args.output_dir)
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
        sys.exit(EXIT_OK if report.passed else EXIT_FAILED)

    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(EXIT_FAILED)

    except SymprotectError as e:
        logger.error(f"{e.kind}: {e}")
        print(json.dumps(error_payload(e), sort_keys=True))
        sys.exit(exit_code_for(e))

    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        sys.exit(EXIT_FAILED)


if __name__ == "__main__":
    main()
