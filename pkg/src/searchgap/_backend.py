"""Select the kernel backend: compiled extension if available, NumPy otherwise.

Set SEARCHGAP_PURE_PYTHON=1 to force the NumPy fallback (used by the
backend-parity tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("SEARCHGAP_PURE_PYTHON"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

BACKEND = kernels.BACKEND_NAME


def available_backends():
    """Return the importable kernel modules keyed by name."""
    out = {_kernels_py.BACKEND_NAME: _kernels_py}
    try:
        from . import _kernels

        out[_kernels.BACKEND_NAME] = _kernels
    except ImportError:
        pass
    return out
