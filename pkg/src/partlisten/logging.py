import logging
import os
import sys

import structlog

OWNED = "_partlisten_handler"


def configure_logging(log_file=None):
    """Configure structlog with stdlib integration.

    Dev (DEBUG=true): pretty colored console output.
    Otherwise JSON lines to stdout. When log_file is given, JSON lines are
    also appended there so a run directory keeps its own log.
    """
    debug = os.getenv("DEBUG", "false").lower() == "true"
    log_level = os.getenv("LOG_LEVEL", "DEBUG" if debug else "INFO").upper()

    shared_processors = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
    ]

    console_renderer = (
        structlog.dev.ConsoleRenderer() if debug else structlog.processors.JSONRenderer()
    )

    root_logger = logging.getLogger()
    _detach(root_logger, lambda handler: True)

    root_logger.setLevel(getattr(logging, log_level, logging.INFO))

    structlog.configure(
        processors=[
            *shared_processors,
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )

    console = logging.StreamHandler(sys.stdout)
    _attach(root_logger, console, console_renderer)

    if log_file is not None:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        _attach(root_logger, file_handler, structlog.processors.JSONRenderer())

    return log_level


def close_log_files():
    """Detach and close the log files opened by configure_logging."""
    _detach(logging.getLogger(), lambda handler: isinstance(handler, logging.FileHandler))


def _detach(root_logger, selected):
    for handler in list(root_logger.handlers):
        if getattr(handler, OWNED, False) and selected(handler):
            root_logger.removeHandler(handler)
            handler.close()


def _attach(root_logger, handler, renderer):
    handler.setFormatter(
        structlog.stdlib.ProcessorFormatter(
            processors=[
                structlog.stdlib.ProcessorFormatter.remove_processors_meta,
                renderer,
            ],
        )
    )
    setattr(handler, OWNED, True)
    root_logger.addHandler(handler)
