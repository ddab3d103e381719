"""Backend selection for the subset-lattice kernels.

The compiled extension is used when it imports; set ``BNEXACT_BACKEND=python``
to force the pure-Python fallback.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels


def available() -> list[str]:
    return sorted(_BACKENDS)


def default_name() -> str:
    forced = os.environ.get("BNEXACT_BACKEND")
    if forced:
        return forced
    return "cython" if _ckernels is not None else "python"


def get(name: str | None = None):
    name = name or default_name()
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {available()}") from None


BACKEND = default_name()
