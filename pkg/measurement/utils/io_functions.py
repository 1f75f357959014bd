# ----------------------------------------
# Utility functions for the IO operations
# ----------------------------------------

import os
import sys


def ensure_outdir(path: str) -> None:
    if path:
        os.makedirs(path, exist_ok=True)


def read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def write_bytes(path: str, content: bytes) -> None:
    """Write to path, or to stdout when path is '-' or empty."""
    if not path or path == "-":
        sys.stdout.buffer.write(content)
        sys.stdout.flush()
        return
    ensure_outdir(os.path.dirname(path))
    with open(path, "wb") as f:
        f.write(content)


def write_text(path: str, content: str) -> None:
    write_bytes(path, content.encode("utf-8"))
