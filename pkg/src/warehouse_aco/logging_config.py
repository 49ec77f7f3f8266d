"""Structured logging for solver runs, training and benchmarks."""

import logging
import sys
from typing import Any

import numpy as np
import structlog
from structlog.typing import EventDict, WrappedLogger

# Arrays up to this size are logged inline; larger ones only by shape.
_MAX_INLINE_ARRAY = 16


def _plain_value(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        if value.size <= _MAX_INLINE_ARRAY:
            return value.tolist()
        return f"ndarray{value.shape}"
    if isinstance(value, tuple):
        return tuple(_plain_value(v) for v in value)
    return value


def numpy_to_python(_: WrappedLogger, __: str, event_dict: EventDict) -> EventDict:
    """Replace numpy scalars and arrays in an event with plain Python values."""
    return {key: _plain_value(value) for key, value in event_dict.items()}


def setup_logging(log_level: str = "INFO", environment: str = "production") -> None:
    """
    Configure structlog for the CLI and scripts.

    Events go to stderr so tables and reports printed on stdout stay parseable.
    Development renders coloured console lines; every other environment
    renders one JSON object per event.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        environment: Environment mode (development, staging, production)
    """
    level = getattr(logging, log_level.upper(), logging.INFO)
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level, force=True)
    # joblib workers are chatty at INFO
    logging.getLogger("joblib").setLevel(max(level, logging.WARNING))

    shared: list[structlog.types.Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
        numpy_to_python,
    ]

    renderer: list[structlog.types.Processor]
    if environment == "development":
        renderer = [
            structlog.dev.ConsoleRenderer(
                colors=True, exception_formatter=structlog.dev.better_traceback
            )
        ]
    else:
        renderer = [structlog.processors.dict_tracebacks, structlog.processors.JSONRenderer()]

    structlog.configure(
        processors=shared + renderer,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def bind_run_context(**context: Any) -> None:
    """Attach run identifiers (command, seed, ...) to every later event."""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(**context)


def get_logger(name: str | None = None) -> structlog.stdlib.BoundLogger:
    """Get a structured logger, typically named after the calling module."""
    return structlog.get_logger(name)
