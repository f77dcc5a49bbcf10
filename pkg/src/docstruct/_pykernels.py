"""Pure-Python kernels. Semantics and float operation order must match
``_ckernels.pyx`` exactly so both backends produce identical results.

Boxes are passed as a flat sequence ``[x0, y0, x1, y1, x0, y0, ...]``.
"""

from __future__ import annotations

from typing import Sequence


def _unpack(coords: Sequence[float]) -> list[tuple[float, float, float, float]]:
    it = iter(coords)
    return list(zip(it, it, it, it))


def nesting_pairs(
    coords: Sequence[float], theta1: float, theta2: float
) -> list[tuple[int, int]]:
    """Index pairs ``(subj, obj)`` where ``obj`` is enclosed by ``subj``.

    A pair qualifies on full containment, or when the covered fraction of
    ``obj`` is at least ``theta1`` and the area ratio exceeds ``theta2``.
    Objects with zero area are skipped.
    """
    boxes = _unpack(coords)
    out: list[tuple[int, int]] = []
    for j, (ox0, oy0, ox1, oy1) in enumerate(boxes):
        area_o = (ox1 - ox0) * (oy1 - oy0)
        if area_o <= 0.0:
            continue
        for i, (sx0, sy0, sx1, sy1) in enumerate(boxes):
            # disjoint or edge-touching: neither branch can fire for a
            # positive-area object
            if sx1 <= ox0 or ox1 <= sx0 or sy1 <= oy0 or oy1 <= sy0 or i == j:
                continue
            if sx0 <= ox0 and sy0 <= oy0 and ox1 <= sx1 and oy1 <= sy1:
                out.append((i, j))
                continue
            iw = (sx1 if sx1 < ox1 else ox1) - (sx0 if sx0 > ox0 else ox0)
            ih = (sy1 if sy1 < oy1 else oy1) - (sy0 if sy0 > oy0 else oy0)
            if (iw * ih) / area_o >= theta1:
                area_s = (sx1 - sx0) * (sy1 - sy0)
                if area_s / area_o > theta2:
                    out.append((i, j))
    out.sort()
    return out


def iou_matrix(a: Sequence[float], b: Sequence[float]) -> list[float]:
    """Row-major IoU matrix between box lists ``a`` and ``b``.

    Pairs of two zero-area boxes score 0.0.
    """
    ba = _unpack(a)
    bb = _unpack(b)
    areas_b = [(x1 - x0) * (y1 - y0) for x0, y0, x1, y1 in bb]
    nb = len(bb)
    out = [0.0] * (len(ba) * nb)
    for i, (ax0, ay0, ax1, ay1) in enumerate(ba):
        area_a = (ax1 - ax0) * (ay1 - ay0)
        base = i * nb
        for j, (bx0, by0, bx1, by1) in enumerate(bb):
            if ax1 <= bx0 or bx1 <= ax0 or ay1 <= by0 or by1 <= ay0:
                continue
            area_b = areas_b[j]
            if area_a <= 0.0 and area_b <= 0.0:
                continue
            iw = (ax1 if ax1 < bx1 else bx1) - (ax0 if ax0 > bx0 else bx0)
            ih = (ay1 if ay1 < by1 else by1) - (ay0 if ay0 > by0 else by0)
            inter = iw * ih
            out[base + j] = inter / (area_a + area_b - inter)
    return out
