"""Shared plumbing of the command-line scripts."""

import structlog

from ..config import load_environment
from ..errors import BundleFormatError, InvalidInputError
from ..logging import close_log_files, configure_logging

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


def run_command(command, args):
    """Run command(args) and map its outcome to an exit code."""
    load_environment()
    configure_logging()

    try:
        command(args)
    except (InvalidInputError, BundleFormatError) as exc:
        logger.error("invalid_input", error=str(exc), error_type=type(exc).__name__)
        return EXIT_INVALID
    except Exception:
        logger.exception("command_failed")
        return EXIT_FAILURE
    finally:
        structlog.contextvars.clear_contextvars()
        close_log_files()

    return EXIT_OK


def parse_ratios(text):
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise InvalidInputError(f"Ratios must be comma separated numbers, got '{text}'") from exc
