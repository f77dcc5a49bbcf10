"""Backend selection for the pairwise box kernels.

The compiled extension is used when importable; setting the environment
variable ``DOCSTRUCT_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

from __future__ import annotations

import os
from array import array
from typing import Iterable

from docstruct import _pykernels
from docstruct.geometry import BBox

if os.environ.get("DOCSTRUCT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from docstruct import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def pack(boxes: Iterable[BBox]) -> array:
    buf = array("d")
    for b in boxes:
        buf.extend((b.x0, b.y0, b.x1, b.y1))
    return buf


def nesting_pairs(boxes: list[BBox], theta1: float, theta2: float) -> list[tuple[int, int]]:
    return _impl.nesting_pairs(pack(boxes), theta1, theta2)


def iou_matrix(a: list[BBox], b: list[BBox]) -> list[list[float]]:
    flat = _impl.iou_matrix(pack(a), pack(b))
    nb = len(b)
    return [flat[i * nb : (i + 1) * nb] for i in range(len(a))]
