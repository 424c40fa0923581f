"""Kernel dispatch: compiled extension when built, pure Python otherwise.

Set DISCODRIVE_PURE_KERNELS=1 to force the pure path (used by the parity
tests and the benchmark).
"""

from __future__ import annotations

import os
from typing import Hashable, Sequence

from ._kernels_py import count_ngrams, lcs_length as lcs_length_py

if os.environ.get("DISCODRIVE_PURE_KERNELS") == "1":
    _speedups = None
else:
    try:
        from . import _speedups  # type: ignore[attr-defined]
    except ImportError:
        _speedups = None

HAVE_SPEEDUPS = _speedups is not None


def lcs_length(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    if _speedups is None:
        return lcs_length_py(a, b)
    ids: dict[Hashable, int] = {}
    ai = [ids.setdefault(t, len(ids)) for t in a]
    bi = [ids.setdefault(t, len(ids)) for t in b]
    return _speedups.lcs_length_ids(ai, bi)


__all__ = ["lcs_length", "lcs_length_py", "count_ngrams", "HAVE_SPEEDUPS"]
