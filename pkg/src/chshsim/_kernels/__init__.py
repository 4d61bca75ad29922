"""Backend selection: compiled counting kernels with a pure-numpy fallback.

The compiled extension (``_core``) is optional; if it failed to build or
``CHSHSIM_BACKEND=fallback`` is set, the numpy implementation is used.
Both backends consume the identical random stream and produce identical
counts, so results do not depend on which one is active.
"""

import os

_requested = os.environ.get("CHSHSIM_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "fallback"):
    raise ImportError(
        f"CHSHSIM_BACKEND must be one of auto/compiled/fallback, got {_requested!r}"
    )

if _requested == "fallback":
    from . import _fallback as _impl

    BACKEND = "fallback"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _fallback as _impl

        BACKEND = "fallback"

rtw_pair_counts = _impl.rtw_pair_counts
gaussian_pair_counts = _impl.gaussian_pair_counts

__all__ = ["BACKEND", "rtw_pair_counts", "gaussian_pair_counts"]
