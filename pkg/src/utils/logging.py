# src/utils/logging.py

"""
Structured logging for the weighted interpolation inequality toolkit.

Every record is emitted as one JSON object so solver progress, sweep workers and
cli runs can be filtered by correlation id. A correlation id is a per-thread run id;
the solver sets a fresh one for each solve so interleaved sweep output stays readable.

Features:
- JSON records (timestamp, level, message, logger, correlation_id, module, function, line).
- Structured payloads passed through ``extra={"context": {...}}`` are kept under "context".
- Thread-local correlation ids.
- Log level from the ``CKN_LOG_LEVEL`` environment variable unless given explicitly.
"""

import json
import logging
import logging.config
import os
import sys
import threading
import uuid
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

DEFAULT_LOG_LEVEL = os.getenv("CKN_LOG_LEVEL", "INFO").upper()
if DEFAULT_LOG_LEVEL not in LOG_LEVELS:
    DEFAULT_LOG_LEVEL = "INFO"

_thread_local = threading.local()


class CorrelationIdFilter(logging.Filter):
    """
    Injects the current thread's correlation id into every record.
    """

    def filter(self, record: logging.LogRecord) -> bool:
        record.correlation_id = get_correlation_id()
        return True


def get_correlation_id() -> str:
    """
    Retrieve the current thread's correlation id, generating one if none exists.

    Returns:
        str: The correlation id.
    """
    if not hasattr(_thread_local, "correlation_id"):
        _thread_local.correlation_id = uuid.uuid4().hex[:12]
    return _thread_local.correlation_id


def set_correlation_id(correlation_id: Optional[str] = None) -> str:
    """
    Set the correlation id for the current thread.

    Args:
        correlation_id (Optional[str]): The id to set. If None, a new one is generated.

    Returns:
        str: The id now in effect.
    """
    _thread_local.correlation_id = correlation_id or uuid.uuid4().hex[:12]
    return _thread_local.correlation_id


def clear_correlation_id() -> None:
    """
    Clear the correlation id for the current thread.
    """
    if hasattr(_thread_local, "correlation_id"):
        del _thread_local.correlation_id


@contextmanager
def correlation_scope(correlation_id: Optional[str] = None) -> Iterator[str]:
    """
    Run a block under its own correlation id, restoring the previous one afterwards.
    """
    previous = getattr(_thread_local, "correlation_id", None)
    try:
        yield set_correlation_id(correlation_id)
    finally:
        if previous is None:
            clear_correlation_id()
        else:
            _thread_local.correlation_id = previous


class JsonFormatter(logging.Formatter):
    """
    Renders log records as single-line JSON.
    """

    def format(self, record: logging.LogRecord) -> str:
        log_record: Dict[str, Any] = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "message": record.getMessage(),
            "logger": record.name,
            "correlation_id": getattr(record, "correlation_id", None),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        context = getattr(record, "context", None)
        if context is not None:
            log_record["context"] = context

        if record.exc_info:
            log_record["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_record, ensure_ascii=False, default=str)


def configure_logging(log_level: str = DEFAULT_LOG_LEVEL, stream: Any = None) -> None:
    """
    Configure JSON logging with correlation id support. Safe to call more than once.

    Logs go to stderr by default so that JSON results written to stdout stay parseable.

    Args:
        log_level (str): One of LOG_LEVELS.
        stream: Target stream; defaults to sys.stderr.
    """
    level = log_level.upper() if log_level else DEFAULT_LOG_LEVEL
    if level not in LOG_LEVELS:
        level = DEFAULT_LOG_LEVEL

    logging_config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "json": {
                "()": JsonFormatter,
                "datefmt": "%Y-%m-%dT%H:%M:%S%z",
            }
        },
        "filters": {
            "correlation_id": {
                "()": CorrelationIdFilter,
            }
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "formatter": "json",
                "filters": ["correlation_id"],
                "stream": stream or sys.stderr,
            }
        },
        "root": {
            "level": level,
            "handlers": ["console"],
        },
    }

    logging.config.dictConfig(logging_config)
