"""Text output helper shared by the writers."""

from __future__ import annotations

import contextlib
import sys


@contextlib.contextmanager
def open_text(path, mode: str = "r"):
    """``open`` that maps ``-`` to stdin (reading) or stdout (writing)."""
    if str(path) == "-":
        yield sys.stdout if "w" in mode else sys.stdin
    else:
        with open(path, mode, newline="") as fh:
            yield fh
