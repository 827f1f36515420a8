"""
Logging Setup
Console and file logging for the CLI, the experiment runner and the tests.
"""

import logging
import os
from pathlib import Path
from typing import Optional

from utils.config import config

# Third-party loggers that flood DEBUG output during plotting.
NOISY_LOGGERS = ("matplotlib", "PIL")


def _resolve_level(level: Optional[str]) -> int:
    if level:
        name = level
    elif config.DEBUG_MODE:
        name = "DEBUG"
    else:
        name = os.getenv("LOG_LEVEL", "INFO")
    return getattr(logging, name.upper(), logging.INFO)


def setup_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once; later calls only change the level.

    Matrix runs log from worker threads, so every line carries the thread name.
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(_resolve_level(level))
    if root_logger.handlers:
        return

    logs_dir = Path(os.getenv("LOG_DIR", "logs"))
    logs_dir.mkdir(parents=True, exist_ok=True)
    log_file = logs_dir / f"{config.APP_NAME.lower()}.log"

    formatter = logging.Formatter(
        "%(asctime)s | %(levelname)s | %(threadName)s | %(name)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setFormatter(formatter)

    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)

    root_logger.addHandler(file_handler)
    root_logger.addHandler(stream_handler)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """Return a named logger after ensuring global logging setup."""
    if not logging.getLogger().handlers:
        setup_logging()
    return logging.getLogger(name)
