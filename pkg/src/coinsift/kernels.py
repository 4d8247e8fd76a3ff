"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
semantically and bitwise equivalent. Set COINSIFT_FORCE_PYTHON=1 to force
the fallback (used by the benchmark and the equivalence tests).
"""

from __future__ import annotations

import os

if os.environ.get("COINSIFT_FORCE_PYTHON"):
    from . import _pykern as _impl

    BACKEND = "python"
else:
    try:
        from . import _ckern as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _pykern as _impl

        BACKEND = "python"

pairwise_sqdist = _impl.pairwise_sqdist
assigned_sqdist = _impl.assigned_sqdist
accumulate_centers = _impl.accumulate_centers
