"""Hot-kernel dispatch: compiled extension when importable, numpy otherwise.

Set RESPQ_PURE_PYTHON=1 to force the numpy path (used by the benchmark and
for debugging).  ``BACKEND`` reports which one is active.
"""

import os

from . import _ref

if os.environ.get("RESPQ_PURE_PYTHON", "") not in ("", "0"):
    _impl = _ref
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _ref

BACKEND = _impl.BACKEND

sign_changes = _impl.sign_changes
autocorr_lags = _impl.autocorr_lags
normalized_autocorr_range = _impl.normalized_autocorr_range
music_denominator = _impl.music_denominator
tmcc_mean = _impl.tmcc_mean
subset_scan = _impl.subset_scan
