"""Event-stream kernels, compiled when available.

The Cython extension is used if it imported cleanly, unless the environment
variable ``FOCKFLOW_FORCE_PYTHON`` is set to a non-empty value.  ``BACKEND``
names the active implementation.
"""

import os

from . import _pykernels

python = _pykernels

try:
    from . import _ckernels as compiled
except ImportError:
    compiled = None

if compiled is not None and not os.environ.get("FOCKFLOW_FORCE_PYTHON"):
    _impl = compiled
    BACKEND = "cython"
else:
    _impl = _pykernels
    BACKEND = "python"

cross_correlate = _impl.cross_correlate
dead_time_filter = _impl.dead_time_filter
coincidence_mask = _impl.coincidence_mask
