"""Numeric kernel backends.

Two interchangeable implementations of the hot loops: a compiled extension
(`_fast`, Cython) and a NumPy fallback (`_ref`). The compiled one is used when
it imported successfully; set CECAP_BACKEND=ref or CECAP_BACKEND=fast to force
a choice (forcing `fast` raises if the extension is unavailable).
"""

import os

from . import _ref

_requested = os.environ.get("CECAP_BACKEND", "").strip().lower()

if _requested == "ref":
    _impl = _ref
    BACKEND = "ref"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "fast"
    except ImportError:
        if _requested == "fast":
            raise ImportError(
                "CECAP_BACKEND=fast requested but the compiled extension is not available"
            )
        _impl = _ref
        BACKEND = "ref"

mixture_log_pdf_grid = _impl.mixture_log_pdf_grid
entropy_profile = _impl.entropy_profile
grid_entropy = _impl.grid_entropy
sphere_log_pdf_2 = _impl.sphere_log_pdf_2
sphere_log_pdf_3 = _impl.sphere_log_pdf_3


def backend_name() -> str:
    """Name of the active backend: 'fast' (compiled) or 'ref' (NumPy)."""
    return BACKEND
