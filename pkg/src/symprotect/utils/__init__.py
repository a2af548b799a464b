"""Utility modules for symprotect."""

from .logging_config import setup_logging
from .output import file_digest, write_csv, write_json
from .parallel import get_thread_count, ordered_map

__all__ = [
    "setup_logging",
    "write_csv",
    "write_json",
    "file_digest",
    "ordered_map",
    "get_thread_count",
]
