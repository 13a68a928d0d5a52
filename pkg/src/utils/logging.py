"""Logging configuration for grounded ranking."""
import logging
import sys
from pathlib import Path
from typing import List, Optional

ROOT_LOGGER = "grounded_ranking"

# numpy overflow/invalid-value warnings arrive through the warnings module
_WARNINGS_LOGGER = "py.warnings"


def _handlers(log_file: Optional[Path]) -> List[logging.Handler]:
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))
    for handler in handlers:
        handler.setFormatter(formatter)
    return handlers


def setup_logging(
    log_level: str = "INFO",
    log_file: Optional[Path] = None,
    capture_warnings: bool = True
) -> logging.Logger:
    """
    Set up logging configuration.

    Progress goes to standard error so that stdout stays free for
    command results. Calling it again replaces the previous handlers.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_file: Optional path to log file
        capture_warnings: Route Python warnings (numpy RuntimeWarning
            during divergence, for instance) to the same handlers

    Returns:
        Configured logger
    """
    logger = logging.getLogger(ROOT_LOGGER)
    logger.setLevel(getattr(logging, log_level.upper(), logging.INFO))
    handlers = _handlers(log_file)

    logger.handlers.clear()
    for handler in handlers:
        logger.addHandler(handler)

    logging.captureWarnings(capture_warnings)
    warnings_logger = logging.getLogger(_WARNINGS_LOGGER)
    warnings_logger.handlers.clear()
    if capture_warnings:
        for handler in handlers:
            warnings_logger.addHandler(handler)
        warnings_logger.propagate = False

    return logger


def get_logger(name: str) -> logging.Logger:
    """
    Get a child logger.

    Args:
        name: Logger name (prefixed with 'grounded_ranking.' unless it already is)

    Returns:
        Logger instance
    """
    if name == ROOT_LOGGER or name.startswith(ROOT_LOGGER + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")
