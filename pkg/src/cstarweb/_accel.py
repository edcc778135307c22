"""Backend switch for the hot kernels.

Set ``CSTAR_DISABLE_NUMBA=1`` (or ``CSTAR_BACKEND=numpy``) before import to
run the pure-numpy path. When numba is missing the numpy path is used
automatically.
"""
import os

_flag = os.environ.get("CSTAR_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}
_flag = _flag or os.environ.get("CSTAR_BACKEND", "").strip().lower() == "numpy"

try:
    if _flag:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


if HAS_NUMBA:

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)

else:

    def njit(*args, **kwargs):
        # bare @njit or @njit(...)
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrapper(f):
            return f

        return wrapper


def default_backend():
    return "numba" if HAS_NUMBA else "numpy"


def thread_count(requested=None):
    """Resolve a worker count; 0 or None means auto (``CSTAR_THREADS`` first)."""
    if requested is None:
        requested = int(os.environ.get("CSTAR_THREADS", "0") or 0)
    if requested <= 0:
        requested = os.cpu_count() or 1
    return max(1, int(requested))
