"""Selects the compiled kernels when available, else the pure-Python ones.

Set ``LOTTERYNET_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as python

if os.environ.get("LOTTERYNET_PURE_PYTHON") == "1":
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "compiled" if compiled is not None else "python"

enumerate_outcomes = _impl.enumerate_outcomes
first_swap_counts = _impl.first_swap_counts
xor_below_count = _impl.xor_below_count
