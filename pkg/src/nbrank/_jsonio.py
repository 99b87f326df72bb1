"""JSON emission with fixed-precision floats, and atomic file writes."""

import json
import math
import os
import tempfile
from contextlib import contextmanager

import numpy as np


def fmt_float(x, digits=17):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    s = format(x, f".{digits}g")
    # keep floats recognisable as floats on reload
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, digits=17):
    """Compact JSON with floats written at ``digits`` significant digits."""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj, digits)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k), ensure_ascii=False)}:{dumps(v, digits)}" for k, v in obj.items())
        return "{" + ",".join(items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(dumps(v, digits) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@contextmanager
def atomic_write(path, mode="w"):
    """Write to a temporary sibling, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        kwargs = {"encoding": "utf-8", "newline": "\n"} if "b" not in mode else {}
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
