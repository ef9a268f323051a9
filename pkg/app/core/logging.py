import logging
import logging.handlers
import sys
import os
import threading
from contextlib import contextmanager
from app.core.config import settings

_stage = threading.local()


def current_stage() -> str:
    return getattr(_stage, "name", "-")


@contextmanager
def stage_context(name: str):
    """Tag log records emitted inside the block with a pipeline stage name."""
    previous = current_stage()
    _stage.name = name
    try:
        yield
    finally:
        _stage.name = previous


class StageFilter(logging.Filter):
    def filter(self, record):
        record.stage = getattr(record, 'stage', current_stage())
        return True


def setup_logging(level: str = None):
    """Configure logging for the library and CLI."""

    formatter = logging.Formatter(settings.LOG_FORMAT)
    log_level = getattr(logging, (level or settings.LOG_LEVEL).upper())

    # Configure root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Remove existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # Console handler; stdout is reserved for data
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(log_level)
    root_logger.addHandler(console_handler)

    # File handler for long experiment runs
    if settings.LOG_FILE and not settings.DEBUG:
        log_dir = os.path.dirname(settings.LOG_FILE)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            settings.LOG_FILE,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=5,
            encoding='utf-8'
        )
        file_handler.setFormatter(formatter)
        file_handler.setLevel(log_level)
        root_logger.addHandler(file_handler)

    # Set specific loggers
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)

    stage_filter = StageFilter()
    for handler in root_logger.handlers:
        handler.addFilter(stage_filter)

    return root_logger
