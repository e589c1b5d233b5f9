"""
cli/main.py - Command-line entry point

Sets up structured logging on stderr, dispatches to the subcommands and maps
library errors onto the exit-code contract: 0 success, 1 usage or
configuration error, 2 validity failure.
"""

import argparse
import datetime
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from cli.commands import cutoff, scan, stats, validate
from core.errors import ConfigError, DomainError, PassiveDecoyError
from core.settings import Settings, get_settings

logger = logging.getLogger("passive-decoy")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2

# Attributes every LogRecord carries; anything else came in through `extra`
_RESERVED = set(vars(logging.LogRecord("", 0, "", 0, "", None, None))) | {"message", "asctime"}


class JsonFormatter(logging.Formatter):
    def format(self, record):
        log_record = {
            "timestamp": datetime.datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith("_"):
                log_record[key] = value
        if record.exc_info:
            log_record["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_record, default=str)


def configure_logging(settings: Settings) -> None:
    """Install a single stderr handler on the root logger."""
    handler = logging.StreamHandler(sys.stderr)
    if settings.is_json_logging():
        handler.setFormatter(JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(settings.log_level)


class CliArgumentParser(argparse.ArgumentParser):
    """argparse reports usage errors with exit status 2; this tool reserves 2 for validity failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        prog="passive-decoy",
        description="Passive decoy-state QKD with two interfering phase-randomised weak coherent pulses",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)
    for command in (stats, scan, cutoff, validate):
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging(get_settings())
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        return args.handler(args)
    except (ConfigError, DomainError, ValidationError) as e:
        logger.error(f"Invalid input: {e}", extra={"event": "usage_error", "command": args.command})
        print(f"{parser.prog} {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except PassiveDecoyError as e:
        logger.error(f"Validity failure: {e}", extra={"event": "validity_error", "command": args.command})
        print(f"{parser.prog} {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        logger.error(f"I/O error: {e}", extra={"event": "io_error", "command": args.command})
        print(f"{parser.prog} {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
