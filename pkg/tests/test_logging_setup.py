import logging
from logging.handlers import RotatingFileHandler

import pytest

from lob_bench.logging_setup import LOG_FILE, LOGGER_NAME, setup_logging


@pytest.fixture
def clean_logger():
    logger = logging.getLogger(LOGGER_NAME)
    saved = list(logger.handlers)
    for handler in saved:
        logger.removeHandler(handler)
    yield logger
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    for handler in saved:
        logger.addHandler(handler)


def _file_handlers(logger):
    return [h for h in logger.handlers if isinstance(h, RotatingFileHandler)]


def _console_handlers(logger):
    return [h for h in logger.handlers if type(h) is logging.StreamHandler]


def test_setup_writes_to_log_dir(tmp_path, clean_logger):
    logger = setup_logging(tmp_path / "logs")
    assert logger is clean_logger
    assert not logger.propagate
    logging.getLogger(f"{LOGGER_NAME}.ingest").info("parsed 3 file(s)")
    for handler in logger.handlers:
        handler.flush()
    assert "parsed 3 file(s)" in (tmp_path / "logs" / LOG_FILE).read_text(encoding="utf-8")


def test_repeated_setup_does_not_duplicate_handlers(tmp_path, clean_logger):
    setup_logging(tmp_path)
    setup_logging(tmp_path, level=logging.WARNING)
    owned = _console_handlers(clean_logger) + _file_handlers(clean_logger)
    assert len(_console_handlers(clean_logger)) == 1
    assert len(_file_handlers(clean_logger)) == 1
    assert all(h.level == logging.WARNING for h in owned)


def test_foreign_handlers_keep_their_level(tmp_path, clean_logger):
    foreign = logging.NullHandler()
    foreign.setLevel(logging.DEBUG)
    clean_logger.addHandler(foreign)
    setup_logging(tmp_path, level=logging.ERROR)
    assert foreign.level == logging.DEBUG
    assert foreign in clean_logger.handlers


def test_new_log_dir_moves_file_handler(tmp_path, clean_logger):
    setup_logging(tmp_path / "a")
    setup_logging(tmp_path / "b")
    files = _file_handlers(clean_logger)
    assert len(files) == 1
    assert files[0].baseFilename == str((tmp_path / "b" / LOG_FILE).absolute())
