"""
Project-wide logging configuration.

This module provides a single, centralized logger for the whole tuner.
Once configured, logs are written to both the console and a rotating log file.
"""

import logging
import os
import sys
from functools import wraps
from logging.handlers import RotatingFileHandler
from os.path import exists, join
from time import time

from exprtune.settings import Config


def configure_logging(log_level=logging.INFO, log_dir: str = Config.LOG_DIR):
    """Configure the root logger with file and console handlers.

    Args:
        log_level: Logging level (e.g., logging.INFO, logging.DEBUG) or its name
        log_dir: Directory receiving the rotating log file
    """
    if not exists(log_dir):
        os.makedirs(log_dir)

    # Clear any existing handlers
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    root_logger.setLevel(log_level)

    file_formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
    console_formatter = logging.Formatter(
        "%(asctime)s - %(levelname)-8s %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    # File handler with rotation (10MB per file, keep 5 backups)
    file_handler = RotatingFileHandler(
        filename=join(log_dir, Config.LOG_FILE),
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5,
        encoding="utf-8",
    )
    file_handler.setLevel(log_level)
    file_handler.setFormatter(file_formatter)

    # Console handler; stdout is reserved for command output
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(console_formatter)

    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)


# Module-level logger shared by the whole package
logger = logging.getLogger("exprtune")


def log_execution_time(func):
    @wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time()
        function_name = func.__name__
        ret = func(*args, **kwargs)
        exe_time = round(time() - start_time, 2)
        logger.info(f"{function_name} executed in {exe_time} seconds")
        return ret

    return wrapper
