"""Optional numba acceleration.

Hot kernels are decorated with :func:`optional_njit`. When numba is missing or
``HERDER_DISABLE_NUMBA`` is set to a truthy value, the decorated functions stay
plain Python and callers switch to the vectorised numpy path instead.
"""

from __future__ import annotations

import os

try:
    import numba
    from numba import njit, prange

    numba_installed = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip the tbb probe: an outdated tbb only produces a warning
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    numba_installed = False
    prange = range


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = numba_installed and not _flag("HERDER_DISABLE_NUMBA")


def optional_njit(*args, **kwargs):
    def decorator(func):
        if USE_NUMBA:
            return njit(*args, **kwargs)(func)
        return func

    return decorator


def set_threads(n: int | None) -> int:
    """Cap the number of worker threads used by parallel kernels.

    Returns the effective count. Results never depend on it.
    """
    if n is None:
        env = os.environ.get("HERDER_THREADS")
        n = int(env) if env else None
    if not USE_NUMBA:
        return 1
    limit = numba.config.NUMBA_NUM_THREADS
    if n is None:
        return numba.get_num_threads()
    n = max(1, min(int(n), limit))
    numba.set_num_threads(n)
    return n


def parallel_enabled() -> bool:
    """True when more than one worker thread is available to the kernels."""
    return USE_NUMBA and numba.get_num_threads() > 1
