"""Kernel backend selection: compiled extension if present, numpy fallback.

``TWOTOWER_BACKEND=pure`` or ``=compiled`` forces the choice; by default the
compiled module is used when its build succeeded.
"""

from __future__ import annotations

import os

from . import _pykernels

_forced = os.environ.get("TWOTOWER_BACKEND", "").strip().lower()

if _forced == "pure":
    _impl = _pykernels
elif _forced == "compiled":
    from . import _kernels as _impl  # raises ImportError if the build is missing
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND_NAME

quad_mc = _impl.quad_mc
rollout_episode = _impl.rollout_episode
srp_query = _impl.srp_query
iot_energies = _impl.iot_energies
itt_argmax = _impl.itt_argmax


def available_backends() -> list[str]:
    names = ["pure"]
    try:
        from . import _kernels  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Explicit module handle, independent of the import-time selection."""
    if name == "pure":
        return _pykernels
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
