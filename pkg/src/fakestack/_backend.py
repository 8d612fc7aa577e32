"""Select the compiled kernels when built, the numpy fallback otherwise.

Set ``FAKESTACK_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pycore

if os.environ.get("FAKESTACK_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pycore
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _pycore

BACKEND = "compiled" if _impl is not _pycore else "python"

best_split = _impl.best_split
apply_tree = _impl.apply_tree
present_features = _impl.present_features
smo_solve = _impl.smo_solve
