"""Logging setup

Sets up and defines the logger for the toolkit.
Diagnostics go to standard error so standard output stays machine readable.
"""

# Stdlib imports
import logging

# Third-party modules
from rich.console import Console
from rich.logging import RichHandler

logger = logging.getLogger("nmsens")
logger.setLevel(logging.DEBUG)

stderr_console = Console(stderr=True)

console_handler = RichHandler(console=stderr_console, show_time=False, show_path=False)
console_handler.setLevel(logging.INFO)
console_handler.setFormatter(logging.Formatter("%(message)s"))

# Prevent duplicate handlers if this file is imported several times
if not logger.hasHandlers():
    logger.addHandler(console_handler)


def set_verbosity(verbose: int = 0, quiet: bool = False) -> None:
    """Adjusts the console handler level.

    Args:
        verbose (int): 0 for INFO, 1 or more for DEBUG.
        quiet (bool): Only show warnings and errors.
    """

    if quiet:
        console_handler.setLevel(logging.WARNING)
    elif verbose > 0:
        console_handler.setLevel(logging.DEBUG)
    else:
        console_handler.setLevel(logging.INFO)
