import logging
import os
from logging.handlers import RotatingFileHandler
from typing import List

from config.config import config

ROOT_NAME = "bn_reduction"


def _handlers(level: int) -> List[logging.Handler]:
    log_config = config.logging
    # Console output goes to stderr so that stdout stays clean for reports
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    try:
        log_dir = os.path.dirname(log_config.file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        handlers.append(RotatingFileHandler(
            log_config.file,
            maxBytes=log_config.max_size,
            backupCount=log_config.backup_count
        ))
    except OSError:
        pass  # read-only working directory: console only

    formatter = logging.Formatter(log_config.format)
    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
    return handlers


def setup_logger(name: str = ROOT_NAME, log_level: str = None) -> logging.Logger:
    """
    Set up the package logger with a stderr console handler and a rotating file handler

    Args:
        name (str): Name of the logger
        log_level (str): Logging level (defaults to config setting)

    Returns:
        logging.Logger: Configured logger instance
    """
    level = getattr(logging, (log_level or config.logging.level).upper())
    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.handlers = _handlers(level)
    return logger


def get_logger(module: str) -> logging.Logger:
    """Child of the package logger named after the last component of `module`"""
    return logging.getLogger(ROOT_NAME).getChild(module.rsplit(".", 1)[-1])


def set_level(log_level: str):
    """Change the level of the package logger and its handlers; children inherit it"""
    level = getattr(logging, log_level.upper())
    logger.setLevel(level)
    for handler in logger.handlers:
        handler.setLevel(level)


logger = setup_logger()
