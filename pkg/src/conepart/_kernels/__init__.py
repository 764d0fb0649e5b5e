"""Kernel backend selection.

Imports the compiled extension when present, otherwise the numpy fallback.
Set CONEPART_BACKEND=python to force the fallback (used by the benchmark
and for debugging); any other value, or an import failure, selects what is
available.
"""

import os

_forced = os.environ.get("CONEPART_BACKEND", "").lower()

if _forced == "python":
    from ._fallback import hard_labels, hard_masses, soft_masses

    BACKEND = "python"
else:
    try:
        from ._core import hard_labels, hard_masses, soft_masses

        BACKEND = "cython"
    except ImportError:
        from ._fallback import hard_labels, hard_masses, soft_masses

        BACKEND = "python"


def backend() -> str:
    """Name of the active kernel backend: 'cython' or 'python'."""
    return BACKEND


__all__ = ["hard_labels", "hard_masses", "soft_masses", "backend", "BACKEND"]
