"""Thread-safe working precision for mpmath.

mpmath keeps its precision in one process-wide context, so two threads that
change it concurrently corrupt each other's results. Every extended-precision
section in the package enters through these helpers, which hold a reentrant
lock while the precision is changed. Extended-precision work is therefore
serialised; double-precision work stays parallel.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager

import mpmath as mp

_LOCK = threading.RLock()


@contextmanager
def workprec(prec: int):
    with _LOCK, mp.workprec(prec):
        yield


@contextmanager
def workdps(dps: int):
    with _LOCK, mp.workdps(dps):
        yield
