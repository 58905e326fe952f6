import logging
import sys

import structlog

from ppgauth.config import settings

_configured = False


def configure_logging(level: str | None = None, json_output: bool | None = None) -> None:
    global _configured
    level_name = (level or settings.PPG_LOG_LEVEL).upper()
    use_json = settings.PPG_LOG_JSON if json_output is None else json_output
    structlog.configure(
        processors=[
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.JSONRenderer() if use_json else structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(getattr(logging, level_name, logging.INFO)),
        context_class=dict,
        # stdout is reserved for command results
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
    _configured = True


def get_logger(name: str) -> structlog.BoundLogger:
    if not _configured:
        configure_logging()
    # PrintLogger has no .name, so the logger name travels as bound context
    return structlog.get_logger(name).bind(logger=name)
