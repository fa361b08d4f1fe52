"""Hot-kernel backend selection: compiled extension if available, numpy
fallback otherwise.  Set LAGDMC_FORCE_FALLBACK=1 to skip the extension."""

import os

if os.environ.get("LAGDMC_FORCE_FALLBACK") == "1":
    from . import _fallback as _impl
    BACKEND = "fallback"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        from . import _fallback as _impl
        BACKEND = "fallback"

finite_chain = _impl.finite_chain
gaussian_chain = _impl.gaussian_chain
lagged_sums = _impl.lagged_sums
