"""Kernel backend selection.

The compiled extension is used when it was built and ``LSBM_PURE_PYTHON``
is unset; otherwise the numpy/scipy fallback provides the same functions.
``BACKEND`` names the active choice.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("LSBM_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

AbarOperator = _impl.AbarOperator
score_pass = _impl.score_pass
tie_argmax = _impl.tie_argmax

__all__ = ["AbarOperator", "score_pass", "tie_argmax", "BACKEND"]
