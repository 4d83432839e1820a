import logging
import os
from logging.handlers import RotatingFileHandler
from pathlib import Path

LOGGER_NAME = "lob_bench"
LOG_FILE = "lob_bench.log"
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


def _file_handler(log_dir: Path, fmt: logging.Formatter) -> RotatingFileHandler:
    handler = RotatingFileHandler(
        filename=str(log_dir / LOG_FILE),
        maxBytes=2_000_000,  # ~2MB
        backupCount=5,
        encoding="utf-8",
    )
    handler.setFormatter(fmt)
    return handler


def _owned_handlers(logger: logging.Logger) -> list[logging.Handler]:
    return [
        h for h in logger.handlers
        if type(h) is logging.StreamHandler or isinstance(h, RotatingFileHandler)
    ]


def setup_logging(log_dir: str | Path, level: int = logging.INFO) -> logging.Logger:
    """
    Configure the ``lob_bench`` logger: console + <log_dir>/lob_bench.log (rotating).

    Module loggers (``logging.getLogger(__name__)``) are children of ``lob_bench``
    and inherit these handlers. Calling again never duplicates handlers; it applies
    the new level and moves the log file to ``log_dir`` if that changed.
    """
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    logger.propagate = False

    fmt = logging.Formatter(fmt=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    target = os.path.abspath(log_dir / LOG_FILE)

    consoles = [h for h in logger.handlers if type(h) is logging.StreamHandler]
    files = [h for h in logger.handlers if isinstance(h, RotatingFileHandler)]

    if not consoles:
        console = logging.StreamHandler()
        console.setFormatter(fmt)
        logger.addHandler(console)

    stale = [h for h in files if h.baseFilename != target]
    for handler in stale:
        logger.removeHandler(handler)
        handler.close()
    if len(stale) == len(files):
        logger.addHandler(_file_handler(log_dir, fmt))

    for handler in _owned_handlers(logger):
        handler.setLevel(level)
    return logger
