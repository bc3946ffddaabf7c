"""Numerical kernels: compiled fast path with a pure-Python fallback.

The compiled module is built at install time when a C compiler and Cython
are available; otherwise (or with MATSYM_KERNELS=python in the
environment) the numpy implementation is used.  Both expose the same
functions and agree to floating-point round-off.
"""

import os

from . import pure

try:
    from . import _fast
except ImportError:
    _fast = None

_active = pure if (
    _fast is None or os.environ.get("MATSYM_KERNELS", "").lower() in {"python", "pure"}
) else _fast


def active_backend():
    """The kernel module in use (compiled when available)."""
    return _active


def backend_name() -> str:
    """Name of the active kernel backend: "compiled" or "python"."""
    return _active.NAME


def available_backends() -> dict:
    """All importable kernel backends, keyed by name."""
    backends = {pure.NAME: pure}
    if _fast is not None:
        backends[_fast.NAME] = _fast
    return backends
