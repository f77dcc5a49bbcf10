"""Axis-aligned rectangle arithmetic in page pixel coordinates.

The origin is the top-left corner of the page and ``y`` grows downward.
Boxes are closed rectangles: two boxes that share only an edge intersect
in a zero-area rectangle rather than not at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional


class GeometryError(ValueError):
    """Raised when a geometric quantity is undefined for the given boxes."""


@dataclass(frozen=True, order=True)
class BBox:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if not (self.x0 <= self.x1 and self.y0 <= self.y1):
            raise GeometryError(f"inverted box {self.as_list()}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def is_degenerate(self) -> bool:
        """True for zero-width or zero-height boxes."""
        return self.x1 == self.x0 or self.y1 == self.y0

    @property
    def centroid(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def translate(self, dx: float, dy: float) -> BBox:
        return BBox(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def from_seq(cls, values: Iterable[float]) -> BBox:
        x0, y0, x1, y1 = (float(v) for v in values)
        return cls(x0, y0, x1, y1)


def area(b: BBox) -> float:
    return b.area


def intersection(a: BBox, b: BBox) -> Optional[BBox]:
    """Overlap rectangle of ``a`` and ``b``; ``None`` when they are apart."""
    x0 = max(a.x0, b.x0)
    y0 = max(a.y0, b.y0)
    x1 = min(a.x1, b.x1)
    y1 = min(a.y1, b.y1)
    if x1 < x0 or y1 < y0:
        return None
    return BBox(x0, y0, x1, y1)


def intersection_area(a: BBox, b: BBox) -> float:
    iw = min(a.x1, b.x1) - max(a.x0, b.x0)
    ih = min(a.y1, b.y1) - max(a.y0, b.y0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union. Undefined when both boxes have zero area."""
    area_a = a.area
    area_b = b.area
    if area_a <= 0.0 and area_b <= 0.0:
        raise GeometryError("degenerate pair")
    inter = intersection_area(a, b)
    return inter / (area_a + area_b - inter)


def safe_iou(a: BBox, b: BBox) -> float:
    """Like :func:`iou` but 0.0 for two degenerate boxes."""
    if a.area <= 0.0 and b.area <= 0.0:
        return 0.0
    return iou(a, b)


def overlap_fraction(subj: BBox, obj: BBox) -> float:
    """Fraction of ``obj``'s area covered by ``subj``."""
    area_obj = obj.area
    if area_obj <= 0.0:
        raise GeometryError("zero-area object")
    return intersection_area(subj, obj) / area_obj


def union_bbox(boxes: Iterable[BBox]) -> BBox:
    """Smallest box enclosing every input box."""
    it = iter(boxes)
    try:
        first = next(it)
    except StopIteration:
        raise GeometryError("union of an empty list") from None
    x0, y0, x1, y1 = first.x0, first.y0, first.x1, first.y1
    for b in it:
        x0 = min(x0, b.x0)
        y0 = min(y0, b.y0)
        x1 = max(x1, b.x1)
        y1 = max(y1, b.y1)
    return BBox(x0, y0, x1, y1)


def contains(outer: BBox, inner: BBox) -> bool:
    """Closed-rectangle containment ``inner ⊆ outer``."""
    return (
        outer.x0 <= inner.x0
        and outer.y0 <= inner.y0
        and inner.x1 <= outer.x1
        and inner.y1 <= outer.y1
    )


def horizontal_overlap(b: BBox, left: float, right: float) -> float:
    """Length of ``[b.x0, b.x1] ∩ [left, right]``."""
    return max(0.0, min(b.x1, right) - max(b.x0, left))


def vertical_overlap(b: BBox, top: float, bottom: float) -> float:
    """Length of ``[b.y0, b.y1] ∩ [top, bottom]``."""
    return max(0.0, min(b.y1, bottom) - max(b.y0, top))
