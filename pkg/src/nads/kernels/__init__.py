"""Orbit kernel selection.

The compiled extension is used when it imports; otherwise the numpy
implementation runs. Set ``NADS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback
from ._fallback import (  # noqa: F401
    AFFINE,
    CIRCLE,
    DOUBLE,
    INTERVAL,
    LOGISTIC,
    NEG,
    REAL,
    SCALE,
    SQUARE,
    TENT,
    TRANSLATE,
    eval_program,
    mod1,
)

compiled = None
if os.environ.get("NADS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as compiled
    except ImportError:  # extension not built
        compiled = None

backend = compiled if compiled is not None else _fallback
BACKEND = backend.NAME


def available_backends():
    out = {"python": _fallback}
    if compiled is not None:
        out["cython"] = compiled
    return out
