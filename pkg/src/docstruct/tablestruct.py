"""Table structure recognition from row, column and cell detections.

Rows and columns live on the same level as cells; a cell's position in the
grid is stored in its ``cell_range`` (zero-based, inclusive).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from docstruct.geometry import BBox, contains, intersection, intersection_area, union_bbox
from docstruct.model import Category, Entity

BoxLike = Union[BBox, Entity]


class TableError(ValueError):
    """Raised when detections cannot form a table grid."""


@dataclass(frozen=True)
class TableGrid:
    tabular: BBox
    rows: tuple[BBox, ...]
    columns: tuple[BBox, ...]
    cells: tuple[Entity, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.columns))


def _box(b: BoxLike) -> BBox:
    return b.bbox if isinstance(b, Entity) else b


def _group_runs(values: Sequence[float], gap: float) -> list[list[int]]:
    """Greedy grouping of ascending values; a step larger than ``gap``
    starts a new group."""
    groups: list[list[int]] = []
    prev = None
    for k, v in enumerate(values):
        if prev is None or v - prev > gap:
            groups.append([])
        groups[-1].append(k)
        prev = v
    return groups


def rows_cols_from_cells(
    cells: Sequence[BoxLike], gap: float = 5.0
) -> tuple[list[BBox], list[BBox]]:
    """Derive row and column boxes from cell centroids.

    Cells whose centroid y-coordinates chain together with steps of at most
    ``gap`` pixels form a row, provided the group has two or more cells;
    columns use the x-coordinates the same way.
    """
    boxes = [_box(c) for c in cells]

    def build(axis: int) -> list[BBox]:
        order = sorted(range(len(boxes)), key=lambda k: (boxes[k].centroid[axis], boxes[k].as_list()))
        coords = [boxes[k].centroid[axis] for k in order]
        out = []
        for grp in _group_runs(coords, gap):
            if len(grp) >= 2:
                out.append(union_bbox(boxes[order[k]] for k in grp))
        return out

    return sort_rows(build(1)), sort_columns(build(0))


def sort_rows(rows: Iterable[BBox]) -> list[BBox]:
    return sorted(rows, key=lambda b: (b.centroid[1], b.as_list()))


def sort_columns(columns: Iterable[BBox]) -> list[BBox]:
    return sorted(columns, key=lambda b: (b.centroid[0], b.as_list()))


def resolve_nested_rows_cols(boxes: Iterable[BBox]) -> list[BBox]:
    """Remove nested rows (or columns) until none contains another.

    A box containing exactly one other box drops the inner one; a box
    containing several others is dropped itself. Exact duplicates are
    collapsed first.
    """
    current = sorted(set(boxes), key=lambda b: b.as_list())
    while True:
        inside = {
            k: [m for m, b in enumerate(current) if m != k and contains(a, b)]
            for k, a in enumerate(current)
        }
        drop = set()
        for k, members in inside.items():
            if len(members) == 1:
                drop.add(members[0])
            elif len(members) > 1:
                drop.add(k)
        if not drop:
            return current
        current = [b for k, b in enumerate(current) if k not in drop]


def normalize_extents(
    rows: Sequence[BBox], columns: Sequence[BBox]
) -> tuple[list[BBox], list[BBox], BBox]:
    """Stretch rows to the full tabular width and columns to its height."""
    if not rows or not columns:
        raise TableError("degenerate table")
    tab = union_bbox(list(rows) + list(columns))
    new_rows = [BBox(tab.x0, r.y0, tab.x1, r.y1) for r in rows]
    new_cols = [BBox(c.x0, tab.y0, c.x1, tab.y1) for c in columns]
    return new_rows, new_cols, tab


def _center(spans: list[tuple[float, float]], lo: float, hi: float) -> list[tuple[float, float]]:
    out = [list(s) for s in spans]
    out[0][0] = lo
    out[-1][1] = hi
    for k in range(len(out) - 1):
        mid = (out[k][1] + out[k + 1][0]) / 2.0
        out[k][1] = mid
        out[k + 1][0] = mid
    for a, b in out:
        if b < a:
            raise TableError("degenerate table: boundaries cross after centering")
    return [(a, b) for a, b in out]


def center_boundaries(
    rows: Sequence[BBox], columns: Sequence[BBox]
) -> tuple[list[BBox], list[BBox]]:
    """Move each shared boundary to the midpoint of the two adjacent edges.

    The outermost edges snap to the tabular box, so the rows tile its
    height and the columns tile its width without gaps or overlaps.
    """
    rows = sort_rows(rows)
    columns = sort_columns(columns)
    tab = union_bbox(list(rows) + list(columns))
    ys = _center([(r.y0, r.y1) for r in rows], tab.y0, tab.y1)
    xs = _center([(c.x0, c.x1) for c in columns], tab.x0, tab.x1)
    new_rows = [BBox(r.x0, a, r.x1, b) for r, (a, b) in zip(rows, ys)]
    new_cols = [BBox(a, c.y0, b, c.y1) for c, (a, b) in zip(columns, xs)]
    return new_rows, new_cols


def _matched(lo: float, hi: float, spans: Sequence[tuple[float, float]]) -> list[int]:
    out = []
    for k, (a, b) in enumerate(spans):
        size = b - a
        if size <= 0:
            continue
        if max(0.0, min(hi, b) - max(lo, a)) >= 0.5 * size:
            out.append(k)
    return out


def assign_cell_ranges(
    cells: Sequence[Entity], rows: Sequence[BBox], columns: Sequence[BBox]
) -> list[Entity]:
    """Give each detected cell the rows and columns it covers by at least
    half their height (width). Spanning cells snap to the grid lines; cells
    matching no row or no column are dismissed."""
    row_spans = [(r.y0, r.y1) for r in rows]
    col_spans = [(c.x0, c.x1) for c in columns]
    out = []
    for cell in cells:
        b = cell.bbox
        rs = _matched(b.y0, b.y1, row_spans)
        cs = _matched(b.x0, b.x1, col_spans)
        if not rs or not cs:
            continue
        rng = (min(rs), max(rs), min(cs), max(cs))
        bbox = b
        if rng[1] > rng[0] or rng[3] > rng[2]:
            bbox = BBox(columns[rng[2]].x0, rows[rng[0]].y0, columns[rng[3]].x1, rows[rng[1]].y1)
        out.append(Entity(cell.id, Category.TABLE_CELL, bbox, cell.confidence, rng))
    return out


def _positions(rng: tuple[int, int, int, int]) -> set[tuple[int, int]]:
    rs, re, cs, ce = rng
    return {(i, j) for i in range(rs, re + 1) for j in range(cs, ce + 1)}


def fill_grid(
    rows: Sequence[BBox], columns: Sequence[BBox], spanning_cells: Sequence[Entity]
) -> TableGrid:
    """Complete the grid with one cell per position no spanning cell covers.

    Spanning cells that collide with an earlier one (ordered by range, then
    id) are dropped.
    """
    if not rows or not columns:
        raise TableError("degenerate table")
    occupied: set[tuple[int, int]] = set()
    cells: list[Entity] = []
    for cell in sorted(spanning_cells, key=lambda c: (c.cell_range, c.id)):
        assert cell.cell_range is not None
        pos = _positions(cell.cell_range)
        if pos & occupied:
            continue
        occupied |= pos
        cells.append(cell)
    for i, r in enumerate(rows):
        for j, c in enumerate(columns):
            if (i, j) in occupied:
                continue
            box = intersection(r, c)
            if box is None:
                raise TableError(f"row {i} and column {j} do not intersect")
            cells.append(Entity(f"cell_r{i}_c{j}", Category.TABLE_CELL, box, None, (i, i, j, j)))
    cells.sort(key=lambda c: (c.cell_range, c.id))
    tab = union_bbox(list(rows) + list(columns))
    return TableGrid(tab, tuple(rows), tuple(columns), tuple(cells))


def parse_table(detected: Iterable[Entity], gap: float = 5.0) -> TableGrid:
    """Build a grid from table row, column and cell detections.

    Missing rows or columns are synthesized from cell centroids. Other
    categories are ignored.
    """
    det = sorted(detected, key=lambda e: (e.bbox.as_list(), e.category.value, e.id))
    rows = [e.bbox for e in det if e.category is Category.TABLE_ROW]
    cols = [e.bbox for e in det if e.category is Category.TABLE_COLUMN]
    cells = [e for e in det if e.category is Category.TABLE_CELL]
    if (not rows or not cols) and cells:
        syn_rows, syn_cols = rows_cols_from_cells(cells, gap)
        rows = rows or syn_rows
        cols = cols or syn_cols
    rows = sort_rows(resolve_nested_rows_cols(rows))
    cols = sort_columns(resolve_nested_rows_cols(cols))
    if not rows or not cols:
        raise TableError("degenerate table")
    rows, cols, _ = normalize_extents(rows, cols)
    rows, cols = center_boundaries(rows, cols)
    ranged = assign_cell_ranges(cells, rows, cols)
    spanning = [c for c in ranged if c.cell_range and (c.cell_range[0] != c.cell_range[1] or c.cell_range[2] != c.cell_range[3])]
    return fill_grid(rows, cols, spanning)


def match_cells_to_text(
    grid: TableGrid, text_boxes: Mapping[str, BBox], gamma: float = 0.5
) -> list[tuple[Entity, str]]:
    """Assign each text box to the cell covering the largest share of it,
    provided that share is at least ``gamma``. Ties go to the smallest
    (row, column)."""
    out = []
    for tid in sorted(text_boxes):
        tb = text_boxes[tid]
        if tb.area <= 0:
            raise ValueError(f"text box {tid} has zero area")
        best: Optional[tuple[float, tuple[int, int, int, int], Entity]] = None
        for cell in grid.cells:
            g = intersection_area(cell.bbox, tb) / tb.area
            if g < gamma:
                continue
            assert cell.cell_range is not None
            if best is None or (-g, cell.cell_range) < (-best[0], best[1]):
                best = (g, cell.cell_range, cell)
        if best is not None:
            out.append((best[2], tid))
    out.sort(key=lambda p: (p[0].cell_range, p[1]))
    return out


def adjacency_records(grid: TableGrid, matches: Sequence[tuple[Entity, str]]) -> list[dict[str, Any]]:
    """Neighbour relations between non-empty cells, in the spirit of the
    ICDAR 2013 structure format: each non-empty cell links to the next
    non-empty cell to its right in its first row and below in its first
    column."""
    texts: dict[str, list[str]] = {}
    by_id = {c.id: c for c in grid.cells}
    for cell, tid in matches:
        texts.setdefault(cell.id, []).append(tid)
    filled = [by_id[i] for i in texts]
    out = []
    for cell in sorted(filled, key=lambda c: (c.cell_range, c.id)):
        rs, re, cs, ce = cell.cell_range  # type: ignore[misc]
        right = [o for o in filled if o.cell_range[0] <= rs <= o.cell_range[1] and o.cell_range[2] > ce]  # type: ignore[index]
        below = [o for o in filled if o.cell_range[2] <= cs <= o.cell_range[3] and o.cell_range[0] > re]  # type: ignore[index]
        if right:
            nxt = min(right, key=lambda o: (o.cell_range[2], o.id))  # type: ignore[index]
            out.append(_adj(cell, nxt, "horizontal", texts))
        if below:
            nxt = min(below, key=lambda o: (o.cell_range[0], o.id))  # type: ignore[index]
            out.append(_adj(cell, nxt, "vertical", texts))
    return out


def _adj(a: Entity, b: Entity, direction: str, texts: Mapping[str, list[str]]) -> dict[str, Any]:
    return {
        "from_cell": a.id,
        "to_cell": b.id,
        "direction": direction,
        "from_text": texts[a.id],
        "to_text": texts[b.id],
    }


def grid_to_dict(
    grid: TableGrid,
    matches: Optional[Sequence[tuple[Entity, str]]] = None,
) -> dict[str, Any]:
    d: dict[str, Any] = {
        "rows": len(grid.rows),
        "columns": len(grid.columns),
        "tabular": grid.tabular.as_list(),
        "row_boxes": [r.as_list() for r in grid.rows],
        "column_boxes": [c.as_list() for c in grid.columns],
        "cells": [
            {"id": c.id, "bbox": c.bbox.as_list(), "cell_range": list(c.cell_range or ())}
            for c in grid.cells
        ],
    }
    if matches is not None:
        d["text_matches"] = [{"cell": c.id, "text": t} for c, t in matches]
        d["adjacency"] = adjacency_records(grid, matches)
    return d
