"""Kernel backend selection: compiled extension if available, NumPy otherwise.

Set CAP_FORCE_PYTHON=1 to force the NumPy fallback (used by the benchmark and
the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _kernels_np

if os.environ.get("CAP_FORCE_PYTHON", "").strip() in ("1", "true", "yes"):
    _impl = _kernels_np
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover
        _impl = _kernels_np
        BACKEND = "numpy"

pair_energy = _impl.pair_energy
tv_gradient = _impl.tv_gradient
flip_delta = _impl.flip_delta
