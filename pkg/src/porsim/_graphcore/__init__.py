"""Backend selection for the graph kernels.

Prefers the compiled extension, falls back to the pure-Python twin.
``PORSIM_PURE_PYTHON=1`` forces the fallback (used by tests and the
benchmark to exercise both paths).
"""

import os

from . import _pure

if os.environ.get("PORSIM_PURE_PYTHON") == "1":
    _impl = _pure
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND_NAME
component_labels = _impl.component_labels
weighted_center = _impl.weighted_center


def get_backend(name: str):
    """Return a specific kernel module ("pure" or "cython"), for benchmarks."""
    if name == "pure":
        return _pure
    if name == "cython":
        from . import _speedups  # raises ImportError when not built

        return _speedups
    raise ValueError(f"unknown backend {name!r}")
