import os
from datetime import datetime, timezone
from os import getenv
from os.path import abspath, dirname, join


class Config:
    """
    This class contains all the
    process-level configuration variables for the tuner.

    Experiment parameters live in ``exprtune.engine.TunerConfig``;
    this class only holds paths, logging and execution defaults.
    """

    PROJECT_NAME = "exprtune"
    ROOT_DIR = dirname(dirname(abspath(__file__)))
    LOG_DIR = join(ROOT_DIR, "logs")
    LOG_FILE = "exprtune.log"

    TIMEZONE = timezone.utc
    STARTTIME = datetime.now(TIMEZONE)

    VERSION = getenv("VERSION", "1.0.0")
    LOG_LEVEL = getenv("LOG_LEVEL", "INFO")

    OUTPUT_DIR = getenv("EXPRTUNE_OUTPUT_DIR", join(ROOT_DIR, "results"))
    WORKERS = int(getenv("EXPRTUNE_WORKERS", os.cpu_count() or 1))

    @classmethod
    def get_current_time(cls):
        return datetime.now(cls.TIMEZONE)

    @classmethod
    def elapsed_seconds(cls) -> float:
        return (cls.get_current_time() - cls.STARTTIME).total_seconds()
