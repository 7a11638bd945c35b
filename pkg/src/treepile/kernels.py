"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback.  Setting ``TREEPILE_PURE=1`` forces the fallback.
"""

import os

from . import _pykernels

python_backend = _pykernels

if os.environ.get("TREEPILE_PURE"):
    compiled_backend = None
else:
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend or python_backend
BACKEND = backend.BACKEND

source_table = backend.source_table
trickle_table = backend.trickle_table
landslide_table = backend.landslide_table
trajectory_seeds = backend.trajectory_seeds
simulate = backend.simulate
charpoly_mod = backend.charpoly_mod
solve_mod = backend.solve_mod


def available_backends():
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out
