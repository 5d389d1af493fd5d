"""Hot kernels: bytecode scoring and pendulum rollouts.

Two interchangeable backends implement the same functions (``run``, ``score``,
``rollout``, ``wrap_angle``): a compiled Cython extension and a numpy fallback.
The compiled one is used when it imports; set ``SYNTH_KERNEL=python`` to force
the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType
from typing import Optional

from . import _pykernel
from .bytecode import CompileError, Compiler, disassemble

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

LOSS_KINDS = {"mse": 0, "abs": 1}

_BACKENDS = {"python": _pykernel}
if _ckernel is not None:
    _BACKENDS["cython"] = _ckernel


def available() -> list[str]:
    return sorted(_BACKENDS)


def _default() -> ModuleType:
    forced = os.environ.get("SYNTH_KERNEL")
    if forced:
        if forced not in _BACKENDS:
            raise ImportError(f"SYNTH_KERNEL={forced!r} is not available (have {available()})")
        return _BACKENDS[forced]
    return _BACKENDS.get("cython", _pykernel)


_active = _default()


def backend(name: Optional[str] = None) -> ModuleType:
    """The active backend, or a specific one by name."""
    if name is None:
        return _active
    return _BACKENDS[name]


def set_backend(name: str) -> ModuleType:
    global _active
    _active = _BACKENDS[name]
    return _active


__all__ = ["CompileError", "Compiler", "LOSS_KINDS", "available", "backend", "disassemble", "set_backend"]
