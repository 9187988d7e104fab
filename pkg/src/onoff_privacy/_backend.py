"""Backend selection: compiled Cython kernels with a pure-Python fallback.

The compiled module is preferred when importable; set ONOFF_PRIVACY_BACKEND
to "pure" or "compiled" to force one (forcing "compiled" raises if the
extension is missing). Both expose the same kernel surface and produce
bit-identical results; see benchmarks/bench_backends.py for the speed gap.
"""

from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from . import _reference
from .markov import MarkovModel
from .policy import PolicyTable, table_for

_ENV_VAR = "ONOFF_PRIVACY_BACKEND"


def _load() -> ModuleType:
    choice = os.environ.get(_ENV_VAR, "auto")
    if choice == "pure":
        return _reference
    try:
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    except ImportError:
        if choice == "compiled":
            raise ImportError(
                f"{_ENV_VAR}=compiled but onoff_privacy._kernels is not built; "
                "reinstall the package or use the pure backend"
            )
        return _reference


_impl = _load()


def get() -> ModuleType:
    """The active kernel module."""
    return _impl


def name() -> str:
    return _impl.NAME


def available() -> list[str]:
    names = ["pure"]
    try:
        from . import _kernels  # type: ignore[attr-defined]  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    return names


def table_stack(m: MarkovModel, horizon: int, table: PolicyTable | None = None) -> np.ndarray:
    """Policy rows for every offset a window of ``horizon`` steps can reach.

    stack[tau, ref, x, q] is the row used tau steps after the latest ON time;
    index 0 is never consulted and is filled with NaN so misuse is loud.
    A fixed ``table`` (naive or perturbed) replaces the scheme at all offsets.
    """
    stack = np.full((horizon + 1, 2, 2, 3), np.nan, dtype=np.float64)
    for tau in range(1, horizon + 1):
        stack[tau] = table.probs if table is not None else table_for(m, tau).probs
    return stack
