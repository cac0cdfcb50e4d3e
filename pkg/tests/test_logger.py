import logging
from logging.handlers import RotatingFileHandler

import pytest

from config.config import config
from utils.logger import ROOT_NAME, get_logger, logger, set_level, setup_logger


@pytest.fixture
def restore_level():
    level = logger.level
    yield
    set_level(logging.getLevelName(level))


def test_module_loggers_are_package_children():
    """Test that module loggers hang off the package logger and reach its handlers"""
    child = get_logger("reduction.critical")
    assert child.name == f"{ROOT_NAME}.critical"
    assert child.parent is logger
    assert child.propagate


def test_set_level_reaches_children(restore_level):
    """Test that a level change on the package logger applies to handlers and module loggers"""
    set_level("warning")
    assert logger.level == logging.WARNING
    assert all(h.level == logging.WARNING for h in logger.handlers)
    assert get_logger("reduction.green").getEffectiveLevel() == logging.WARNING


def test_unwritable_log_directory_keeps_console(tmp_path, monkeypatch):
    """Test that a log path that cannot be created leaves a console-only logger"""
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    monkeypatch.setattr(config.logging, "file", str(blocker / "run.log"))
    configured = setup_logger("bn_reduction_console_only", "debug")
    assert len(configured.handlers) == 1
    assert not isinstance(configured.handlers[0], RotatingFileHandler)
    assert configured.level == logging.DEBUG


def test_repeated_setup_does_not_duplicate_handlers(tmp_path, monkeypatch):
    """Test that configuring the same logger twice keeps one handler of each kind"""
    monkeypatch.setattr(config.logging, "file", str(tmp_path / "logs" / "run.log"))
    setup_logger("bn_reduction_twice")
    configured = setup_logger("bn_reduction_twice")
    assert len(configured.handlers) == 2
    assert sum(isinstance(h, RotatingFileHandler) for h in configured.handlers) == 1
