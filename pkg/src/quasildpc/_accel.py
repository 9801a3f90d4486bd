"""Numba detection and the JIT shim used by the hot kernels.

Set ``QUASILDPC_DISABLE_NUMBA=1`` to force the pure-numpy path even when
numba is installed. The loop kernels then run as plain Python (correct but
slow) and :data:`DEFAULT_BACKEND` switches to ``"numpy"``.
"""

from __future__ import annotations

import os

_FLAG = "QUASILDPC_DISABLE_NUMBA"


def _disabled_by_env() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    if _disabled_by_env():
        raise ImportError("numba disabled by " + _FLAG)
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[no-redef]
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def _wrap(fn):
            return fn

        return _wrap


DEFAULT_BACKEND = "numba" if HAVE_NUMBA else "numpy"
BACKENDS = ("numba", "numpy")


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    return backend
