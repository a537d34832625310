"""Tree split-search kernels with a compiled fast path.

The Cython extension is used when it is importable; a source checkout
without a build step, or setting ``INFODEMIC_PURE_PY=1``, falls back to the
pure-NumPy backend.  Both backends share one contract and are tested for
exact agreement; ``benchmarks/bench_split.py`` compares their speed.
"""

import os

from . import _split_py

GINI = _split_py.GINI
MSE = _split_py.MSE
NO_SPLIT = _split_py.NO_SPLIT

if os.environ.get("INFODEMIC_PURE_PY"):
    _impl = _split_py
    BACKEND = "python"
else:
    try:
        from . import _split_cy as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _split_py
        BACKEND = "python"

best_split = _impl.best_split


def backend_name():
    return BACKEND
