"""Backend selection: compiled kernels when available, pure Python otherwise.

Set ``DIFFMARCH_BACKEND=python`` to force the pure-Python kernels (used by
the benchmark and the backend-parity tests).
"""

import os

if os.environ.get("DIFFMARCH_BACKEND", "").lower() in ("python", "pure", "purepy"):
    from . import _purepy as _kernels

    BACKEND = "python"
else:
    try:
        from . import _core as _kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _purepy as _kernels  # type: ignore[no-redef]

        BACKEND = "python"

solve_kernel = _kernels.solve_kernel
vjp_kernel = _kernels.vjp_kernel
