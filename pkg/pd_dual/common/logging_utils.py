import logging
from typing import Optional, Union

from rich.console import Console
from rich.logging import RichHandler


def get_logger(name: str) -> logging.Logger:
    """
    Return the logger for a module of the package. Library code never installs
    handlers; the command line does it through `configure_logging`.

    Args:
        name (`str`):
            Usually `__name__`.

    Returns:
        `logging.Logger`: the module logger.
    """
    return logging.getLogger(name)


def configure_logging(
    level: Union[int, str] = logging.WARNING, console: Optional[Console] = None
) -> logging.Logger:
    """
    Install a `RichHandler` on the package root logger.

    Args:
        level (`Union[int, str]`, optional, default: `logging.WARNING`):
            Logging level, either a number or a name such as `"INFO"`.
        console (`Console`, optional):
            Console to write to, stderr by default.

    Returns:
        `logging.Logger`: the configured package logger.
    """
    logger = logging.getLogger("pd_dual")
    if isinstance(level, str):
        level = level.upper()
    logger.setLevel(level)
    # avoid stacking handlers when the CLI is invoked repeatedly in one process
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(
        console=console or Console(stderr=True), show_path=False, markup=False
    )
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    return logger
