"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python ``_pykernels``. ``MICRORL_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernels

kernels = _pykernels
if os.environ.get("MICRORL_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as kernels  # noqa: F811
    except ImportError:  # extension not built
        kernels = _pykernels

BACKEND = kernels.BACKEND


def available_backends():
    out = {"python": _pykernels}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
