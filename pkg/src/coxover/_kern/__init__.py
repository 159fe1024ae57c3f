"""Numeric kernel dispatch: compiled extension with pure-NumPy fallback.

The compiled module is preferred when it imported successfully; setting
the environment variable ``COXOVER_DISABLE_NATIVE`` (to any non-empty
value) before import forces the fallback. ``backend_name()`` reports
which implementation is live.
"""

import os

from . import fallback

if os.environ.get("COXOVER_DISABLE_NATIVE"):
    backend = fallback
else:
    try:
        from . import _native as backend  # type: ignore[no-redef]
    except ImportError:
        backend = fallback


def backend_name() -> str:
    return "fallback" if backend is fallback else "native"


__all__ = ["backend", "backend_name", "fallback"]
