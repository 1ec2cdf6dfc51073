"""Module setting up the verification report logger."""
import os
import logging
import logging.handlers
import tempfile

import coloredlogs

from steinpoly.config import REPORT_LOG_FILE_NAME

REPORT_LOGGER = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s]: %(message)s"
CONSOLE_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
LOG_LEVEL = logging.DEBUG
default_log_file_path = os.path.join(tempfile.gettempdir(), REPORT_LOG_FILE_NAME)

REPORT_LOGGER.setLevel(LOG_LEVEL)
REPORT_LOGGER.propagate = False
REPORT_LOGGER.addHandler(logging.NullHandler())


def attach_report_file(path=None) -> logging.Handler:
    """Send report lines to a rotating file, replacing any previous one."""
    for handler in list(REPORT_LOGGER.handlers):
        REPORT_LOGGER.removeHandler(handler)
        handler.close()

    try:
        handler = logging.handlers.RotatingFileHandler(
            path or default_log_file_path,
            maxBytes=1024 * 1024,
            backupCount=5,
        )
    except OSError:
        handler = logging.handlers.RotatingFileHandler(
            default_log_file_path,
            maxBytes=1024 * 1024,
            backupCount=5,
        )

    handler.setLevel(LOG_LEVEL)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    REPORT_LOGGER.addHandler(handler)
    return handler


def report(family: str, check: str, j, z, residual: float, passed: bool):
    """Write one verification residual to the report log."""
    REPORT_LOGGER.log(
        logging.INFO if passed else logging.WARNING,
        "%s %s j=%s z=%s residual=%.17g %s",
        family,
        check,
        j,
        z,
        residual,
        "ok" if passed else "FAILED",
    )


def install_console(verbosity: int = 0, quiet: bool = False):
    """Install coloredlogs on the root logger for command line runs."""
    if quiet:
        level = logging.WARNING
    elif verbosity > 0:
        level = logging.DEBUG
    else:
        level = logging.INFO

    coloredlogs.install(level=level, fmt=CONSOLE_FORMAT)
    return level
