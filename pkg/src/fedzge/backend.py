"""Kernel backend selection.

The compiled Cython kernels are preferred when the extension built; the
numpy fallback is always available. ``FEDZGE_BACKEND`` overrides:

    FEDZGE_BACKEND=python   force the numpy kernels
    FEDZGE_BACKEND=c        require the compiled kernels (ImportError if absent)
    FEDZGE_BACKEND=auto     default behaviour

Both backends implement the same function set over C-contiguous float64
arrays; see benchmarks/bench_backends.py for a speed comparison.
"""

from __future__ import annotations

import os

from . import _pykernels

_choice = os.environ.get("FEDZGE_BACKEND", "auto").lower()

if _choice == "python":
    kernels = _pykernels
elif _choice == "c":
    from . import _ckernels as kernels  # noqa: F401
elif _choice == "auto":
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _pykernels
else:
    raise ValueError(f"FEDZGE_BACKEND must be auto, c or python, got {_choice!r}")

BACKEND_NAME: str = kernels.NAME


def active_backend() -> str:
    """Name of the kernel backend selected at import ('c' or 'python')."""
    return BACKEND_NAME
