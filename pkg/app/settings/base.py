import logging.config
import sys
from environs import Env

env = Env()
env.read_env()

LOGGING_LEVEL = env.str("LOGGING_LEVEL", "INFO")
LOGGING_FORMAT = env.str("LOGGING_FORMAT", "plain")  # plain | json

DEFAULT_LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
        "json": {
            "()": "pythonjsonlogger.jsonlogger.JsonFormatter",
            "format": "%(asctime)s %(levelname)s %(name)s %(message)s",
        },
    },
    "handlers": {
        "console": {
            "level": LOGGING_LEVEL,
            "class": "logging.StreamHandler",
            "stream": sys.stdout,
            "formatter": "json" if LOGGING_FORMAT == "json" else "plain",
        },
    },
    "loggers": {
        "": {
            "handlers": ["console"],
            "level": LOGGING_LEVEL,
        },
    },
}
logging.config.dictConfig(DEFAULT_LOGGING)

OUTPUT_DIR = env.str("OUTPUT_DIR", "output")
MAX_SCENARIO_EXECUTION_TIME = env.int("MAX_SCENARIO_EXECUTION_TIME", 60)  # seconds per scenario
SWEEP_CONCURRENCY = env.int("SWEEP_CONCURRENCY", 4)
