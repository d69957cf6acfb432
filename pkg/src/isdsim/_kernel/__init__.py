"""Propagation kernel selection: compiled Cython core with numpy fallback.

Set ``ISDSIM_PURE_PYTHON=1`` to force the fallback (used by the test suite and
the kernel benchmark to compare both paths).
"""

from __future__ import annotations

import os
import warnings

from .common import Dissipator, EnvelopeSpec, MaxStepsExceeded, StepSizeUnderflow, TermSet

__all__ = [
    "Dissipator",
    "EnvelopeSpec",
    "MaxStepsExceeded",
    "StepSizeUnderflow",
    "TermSet",
    "backend_name",
    "propagate_psi",
    "propagate_rho",
]

_FORCE_PURE = os.environ.get("ISDSIM_PURE_PYTHON", "").strip() not in ("", "0")

if not _FORCE_PURE:
    try:
        from . import _core as _backend

        _BACKEND_NAME = "cython"
    except ImportError:
        from . import _python as _backend

        _BACKEND_NAME = "python"
        warnings.warn(
            "isdsim compiled kernel unavailable; using the slow pure-Python "
            "fallback (pip install -e . to build the extension)",
            RuntimeWarning,
            stacklevel=2,
        )
else:
    from . import _python as _backend

    _BACKEND_NAME = "python"


def backend_name() -> str:
    return _BACKEND_NAME


propagate_psi = _backend.propagate_psi
propagate_rho = _backend.propagate_rho
