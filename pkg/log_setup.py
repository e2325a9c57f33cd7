"""
Console logging
Colored stderr logging shared by the CLI and the benchmark runner
"""

import logging
import sys

import colorlog

_FORMAT = "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s"
_HANDLER_NAME = "optomech-console"


def setup_logging(level: int = logging.WARNING) -> logging.Logger:
    """Install the colored handler on the root logger once, then only adjust the level"""
    root = logging.getLogger()
    if not any(h.get_name() == _HANDLER_NAME for h in root.handlers):
        handler = colorlog.StreamHandler(sys.stderr)
        handler.set_name(_HANDLER_NAME)
        handler.setFormatter(colorlog.ColoredFormatter(
            _FORMAT,
            log_colors={
                "DEBUG": "cyan",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
        ))
        root.addHandler(handler)
    root.setLevel(level)
    return root
