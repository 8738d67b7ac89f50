import logging
import os
from typing import Optional

from config import Config

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class RunFileHandler(logging.FileHandler):
    """File handler bound to one output directory; tagged so it is attached once"""

    def __init__(self, log_path: str):
        os.makedirs(os.path.dirname(os.path.abspath(log_path)), exist_ok=True)
        super().__init__(log_path, mode='a', encoding='utf-8')
        self.log_path = os.path.abspath(log_path)


def set_level(level):
    """Apply a log level to every logger created through get_logger"""
    Config.LOG_LEVEL = logging.getLevelName(level) if isinstance(level, int) else str(level).upper()
    for name in list(logging.root.manager.loggerDict):
        logger = logging.getLogger(name)
        if getattr(logger, '_fieldq', False):
            logger.setLevel(Config.LOG_LEVEL)
            for handler in logger.handlers:
                if not isinstance(handler, RunFileHandler):
                    handler.setLevel(Config.LOG_LEVEL)


def get_logger(name, log_path: Optional[str] = None):
    """Get a logger that writes to the console and, optionally, to a run log file"""
    logger = logging.getLogger(name)
    logger.setLevel(Config.LOG_LEVEL)
    logger._fieldq = True
    formatter = logging.Formatter(LOG_FORMAT)

    # Console handler
    if not any(isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler)
               for h in logger.handlers):
        console_handler = logging.StreamHandler()
        console_handler.setLevel(Config.LOG_LEVEL)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)
        logger.propagate = False

    # Run log if an output directory is active
    if log_path:
        target = os.path.abspath(log_path)
        if not any(isinstance(h, RunFileHandler) and h.log_path == target for h in logger.handlers):
            file_handler = RunFileHandler(target)
            file_handler.setLevel(logging.INFO)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    return logger


def detach_run_log(name):
    """Close and remove run-log handlers from a logger"""
    logger = logging.getLogger(name)
    for handler in list(logger.handlers):
        if isinstance(handler, RunFileHandler):
            logger.removeHandler(handler)
            handler.close()


def attach_run_log(log_path: str):
    """Send every library logger to log_path as well; returns the logger names touched"""
    names = [name for name in list(logging.root.manager.loggerDict)
             if getattr(logging.getLogger(name), '_fieldq', False)]
    for name in names:
        get_logger(name, log_path)
    return names
