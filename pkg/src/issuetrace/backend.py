"""Kernel backend selection.

Imports the compiled extension when present, otherwise the pure numpy
fallback.  Set ISSUETRACE_PURE=1 to force the fallback (useful for the
backend-comparison benchmark and for debugging).
"""

from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

if os.environ.get("ISSUETRACE_PURE"):
    from . import _corepy as _impl

    BACKEND = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _corepy as _impl

        BACKEND = "pure"
        logger.warning(
            "compiled kernels unavailable; using the pure numpy fallback "
            "(build with `python setup.py build_ext --inplace` for speed)"
        )

gibbs_epoch = _impl.gibbs_epoch
sgns_epoch = _impl.sgns_epoch


def load_pure():
    """The fallback module, importable regardless of the active backend."""
    from . import _corepy

    return _corepy


def load_compiled():
    """The compiled module, or None when it is not built."""
    try:
        from . import _core  # type: ignore[attr-defined]

        return _core
    except ImportError:
        return None
