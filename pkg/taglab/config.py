from enum import Enum
import multiprocessing
import os
from pathlib import Path
import sys

from dotenv import load_dotenv
from loguru import logger

# Settings in a .env file at the working directory apply to every command.
load_dotenv()

_PROJ_ROOT = Path(__file__).resolve().parents[1]


class Directories(Enum):
    """Default locations of corpora, split files, models and reports."""

    PROJ_ROOT = _PROJ_ROOT
    DATA_DIR = PROJ_ROOT / "data"
    RAW_DATA_DIR = DATA_DIR / "raw"
    PROCESSED_DATA_DIR = DATA_DIR / "processed"

    MODELS_DIR = PROJ_ROOT / "models"

    REPORTS_DIR = PROJ_ROOT / "reports"
    LOGS_DIR = REPORTS_DIR / "logs"


class Environments(Enum):
    LOGGING_LEVEL = os.getenv("LOGGING_LEVEL", "INFO")
    # worker processes for cross-validation folds and grid-search cells
    TAGLAB_THREADS = max(1, int(os.getenv("TAGLAB_THREADS", "1") or 1))


LOG_FILE = Directories.LOGS_DIR.value / "runtime.log"

logger.remove(0)
# Spawned workers re-import this module; only the main process starts a fresh
# log, and every process appends so worker lines do not overwrite it.
if multiprocessing.parent_process() is None:
    LOG_FILE.parent.mkdir(parents=True, exist_ok=True)
    LOG_FILE.write_text("")
logger.add(LOG_FILE, mode="a", buffering=1, level="DEBUG")

# Console messages go through tqdm.write so they do not break progress bars,
# and to stderr so `taglab tag` can stream its output to stdout.
# https://github.com/Delgan/loguru/issues/135
try:
    from tqdm import tqdm

    logger.add(
        lambda msg: tqdm.write(msg, end="", file=sys.stderr),
        colorize=True,
        level=Environments.LOGGING_LEVEL.value,
    )
except ModuleNotFoundError:
    logger.add(sys.stderr, colorize=True, level=Environments.LOGGING_LEVEL.value)

logger.debug(f"Project root directory: {Directories.PROJ_ROOT.value}")
