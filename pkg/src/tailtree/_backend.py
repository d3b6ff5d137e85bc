"""Kernel backend selection.

The hot numeric loops exist twice: an njit-compiled version in
``_kernels_numba`` and a vectorized pure-numpy version in ``_kernels_numpy``.
Both expose the same functions with identical semantics; results agree
numerically (MC samplers agree in distribution, not bitwise, because the
two paths consume randomness in different orders).

Selection is controlled by the ``TAILTREE_NUMBA`` environment variable:

* unset or ``auto`` -- use numba when it imports, else fall back;
* ``1`` -- require numba (ImportError propagates);
* ``0`` -- force the pure-numpy path.

``set_backend()`` overrides the choice at runtime (used by tests and the
benchmark script).
"""

from __future__ import annotations

import os
import warnings

_FORCED: str | None = None


def _env_choice() -> str:
    return os.environ.get("TAILTREE_NUMBA", "auto").strip().lower()


def _resolve() -> str:
    if _FORCED is not None:
        return _FORCED
    choice = _env_choice()
    if choice in ("0", "off", "false", "no"):
        return "numpy"
    if choice in ("1", "on", "true", "yes"):
        return "numba"
    try:
        import numba  # noqa: F401
    except Exception:  # pragma: no cover - environment without numba
        warnings.warn("numba unavailable, using pure-numpy kernels")
        return "numpy"
    return "numba"


def set_backend(name: str | None) -> None:
    """Force ``"numba"`` or ``"numpy"``; ``None`` restores env-based choice."""
    global _FORCED
    if name is not None and name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    _FORCED = name


def active_backend() -> str:
    return _resolve()


def kernels():
    """Return the module implementing the active kernel set."""
    if _resolve() == "numba":
        from tailtree import _kernels_numba

        return _kernels_numba
    from tailtree import _kernels_numpy

    return _kernels_numpy
