"""Logging setup for symprotect runs."""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Optional

from ..config import APP_NAME, get_user_config_dir

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LOG_MAX_BYTES = 10 * 1024 * 1024
LOG_BACKUPS = 5


def default_log_file() -> Path:
    """symprotect.log in the user config directory."""
    log_dir = get_user_config_dir()
    log_dir.mkdir(parents=True, exist_ok=True)
    return log_dir / f"{APP_NAME}.log"


def setup_logging(
    level: str = "INFO", log_file: Optional[Path] = None, console: bool = True
) -> None:
    """Set up logging for a symprotect run.

    Python warnings (scipy integrator and ARPACK notices among them) are
    routed through the same handlers.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Path to log file (default: symprotect.log in the user config dir)
        console: Whether to log to stdout
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    root_logger.handlers.clear()
    logging.captureWarnings(True)

    handlers = []
    if console:
        handlers.append(logging.StreamHandler(sys.stdout))

    try:
        target = Path(log_file) if log_file is not None else default_log_file()
        handlers.append(
            logging.handlers.RotatingFileHandler(
                target, maxBytes=LOG_MAX_BYTES, backupCount=LOG_BACKUPS
            )
        )
    except OSError as e:
        target = None
        file_error: Optional[OSError] = e
    else:
        file_error = None

    for handler in handlers:
        handler.setLevel(numeric_level)
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)

    if file_error is not None:
        logging.warning(f"Could not set up file logging, console only: {file_error}")
    else:
        logging.debug(f"Logging configured. Level: {level}, File: {target}")
