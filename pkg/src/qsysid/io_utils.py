"""Small shared I/O helpers: deterministic float formatting and atomic
file replacement."""

from __future__ import annotations

import os
import tempfile


def fmt17(x: float) -> str:
    """Shortest representation carrying 17 significant digits."""
    return f"{float(x):.17g}"


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename, so
    readers never observe a partially written file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
