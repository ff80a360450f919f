"""Kernel backend selection.

Imports the compiled extension when available, otherwise the numpy
fallback.  ``BATCHREG_BACKEND`` overrides the choice: ``compiled`` insists
on the extension (ImportError if missing), ``numpy`` forces the fallback,
anything else (or unset) means auto.
"""

import os

from . import _kernels_np

_requested = os.environ.get("BATCHREG_BACKEND", "auto").lower()

if _requested == "numpy":
    kernels = _kernels_np
    BACKEND = "numpy"
elif _requested == "compiled":
    from . import _kernels as kernels  # noqa: F401

    BACKEND = "compiled"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        kernels = _kernels_np
        BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND


def get_backend(name: str):
    """Return a kernel module by name ('compiled' or 'numpy').

    Used by tests and the kernel benchmark to compare the two
    implementations directly.
    """
    if name == "numpy":
        return _kernels_np
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
