"""
DP-SGD Privacy Ledger
Main application entry point
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src.cli.commands import EXIT_DIVERGENCE, EXIT_USAGE, add_commands
from src.cli.selfcheck import cmd_selfcheck
from src.config.settings import Settings
from src.utils.errors import (
    ConfigError,
    DivergenceError,
    InvalidCurveError,
    PrivacyDomainError,
    ResolutionError,
    SimulationStalledError,
)

logger = logging.getLogger(__name__)


def setup_logging(log_file: str, verbose: bool = False):
    """Root logger: one file handler and one stderr handler"""
    Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(),
        ],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpledger",
        description="Privacy accountant and federated DP-SGD simulator",
    )
    parser.add_argument("--settings", help="settings JSON (default dpledger.json)")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    subparsers = parser.add_subparsers(dest="verb", required=True)
    add_commands(subparsers, cmd_selfcheck)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE

    settings = Settings(args.settings)
    setup_logging(settings.log_file, args.verbose)

    try:
        return args.command(args, settings)
    except (ConfigError, PrivacyDomainError, InvalidCurveError, ResolutionError) as e:
        logger.error(f"{args.verb}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, SimulationStalledError) as e:
        logger.error(f"Run aborted: {e}")
        print(f"aborted: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
