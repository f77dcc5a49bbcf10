"""Seeded synthetic pages and detector noise.

``generate_page`` lays out a page with content blocks, optional abstract,
heading, figures and tables in one or two columns and returns both the
ground-truth structure and the record stream a reverse renderer would emit
for it. ``perturb`` turns ground truth into detector-like output.

Meta entities (header, footer, page number) are part of the ground truth
but not of the record stream, since they do not come from the body source.
"""

from __future__ import annotations

import os
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from docstruct.geometry import BBox, union_bbox
from docstruct.model import (
    DETECTOR_CATEGORIES,
    Category,
    DocStructure,
    Entity,
    Relation,
    RelationType,
    dumps_structure,
    write_text_atomic,
)
from docstruct.relations import reading_order
from docstruct.weaklabels import RenderRecord, TokenKind, dumps_records

PAGE_WIDTH = 1240.0
PAGE_HEIGHT = 1754.0
MARGIN = 100.0
GUTTER = 40.0
LINE_H = 18.0
LINE_PITCH = 26.0
BLOCK_GAP = 24.0
FLOAT_GAP = 30.0


@dataclass(frozen=True)
class FloatSpec:
    kind: str  # "figure" or "table"
    rows: int = 3
    cols: int = 3
    graphics: int = 1
    full_width: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("figure", "table"):
            raise ValueError(f"unknown float kind {self.kind!r}")
        if self.kind == "table" and (self.rows < 1 or self.cols < 2):
            raise ValueError("tables need at least 1 row and 2 columns")
        if self.kind == "figure" and self.graphics < 1:
            raise ValueError("figures need at least one graphic")


@dataclass(frozen=True)
class PageSpec:
    seed: int = 0
    columns: int = 1
    blocks_per_column: int = 3
    floats: tuple[FloatSpec, ...] = ()
    include_meta: bool = False
    abstract: bool = False
    heading: bool = False

    def __post_init__(self) -> None:
        if self.columns not in (1, 2):
            raise ValueError("columns must be 1 or 2")
        if self.blocks_per_column < 0:
            raise ValueError("blocks_per_column must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["floats"] = [asdict(f) for f in self.floats]
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> PageSpec:
        d = dict(d)
        d["floats"] = tuple(FloatSpec(**f) for f in d.get("floats", ()))
        return cls(**d)


@dataclass(frozen=True)
class NoiseSpec:
    jitter: float = 0.0
    drop_rate: float = 0.0
    relabel_rate: float = 0.0
    confidence_base: float = 1.0
    confidence_jitter: float = 0.0
    duplicate_rate: float = 0.0
    drop_nested_floats: bool = False

    def __post_init__(self) -> None:
        for name in ("drop_rate", "relabel_rate", "duplicate_rate", "confidence_base"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.jitter < 0 or self.confidence_jitter < 0:
            raise ValueError("jitter values must be non-negative")


@dataclass
class _Builder:
    entities: list[Entity] = field(default_factory=list)
    parents: dict[str, str] = field(default_factory=dict)
    order: dict[Optional[str], list[str]] = field(default_factory=dict)
    records: list[RenderRecord] = field(default_factory=list)

    def add(self, cat: Category, box: BBox, parent: Optional[str] = None) -> str:
        eid = f"e{len(self.entities) + 1:03d}"
        self.entities.append(Entity(eid, cat, box))
        if parent is not None:
            self.parents[eid] = parent
        return eid

    def text(self, box: BBox) -> None:
        self.records.append(RenderRecord(TokenKind.TEXT_TOKEN, box))

    def begin(self, env: str) -> None:
        self.records.append(RenderRecord(TokenKind.ENVIRONMENT_BEGIN, env_name=env))

    def end(self, env: str) -> None:
        self.records.append(RenderRecord(TokenKind.ENVIRONMENT_END, env_name=env))

    def command(self, name: str, box: Optional[BBox] = None) -> None:
        self.records.append(RenderRecord(TokenKind.COMMAND, box, command_name=name))


def _lines(rng: random.Random, x0: float, x1: float, y: float, n: int) -> list[BBox]:
    out = []
    for k in range(n):
        right = x1 if k < n - 1 else x0 + (x1 - x0) * rng.uniform(0.35, 0.95)
        out.append(BBox(x0, y + k * LINE_PITCH, round(right), y + k * LINE_PITCH + LINE_H))
    return out


def _text_entity(b: _Builder, cat: Category, lines: list[BBox], parent: Optional[str]) -> str:
    """Entity of ``cat`` over ``lines``; two or more lines get content line
    children, a single line is the entity itself."""
    if len(lines) == 1:
        return b.add(cat, lines[0], parent)
    eid = b.add(cat, union_bbox(lines), parent)
    b.order[eid] = [b.add(Category.CONTENT_LINE, ln, eid) for ln in lines]
    return eid


def _block(b: _Builder, rng: random.Random, x0: float, x1: float, y: float) -> tuple[str, float]:
    lines = _lines(rng, x0, x1, y, rng.randint(2, 5))
    b.command("par")
    for ln in lines:
        b.text(ln)
    return _text_entity(b, Category.CONTENT_BLOCK, lines, None), lines[-1].y1


def _figure(b: _Builder, rng: random.Random, spec: FloatSpec, x0: float, x1: float, y: float) -> tuple[str, float]:
    fw = (x1 - x0) * rng.uniform(0.6, 0.9)
    fx0 = round((x0 + x1 - fw) / 2.0)
    fx1 = round(fx0 + fw)
    gh = float(rng.randint(150, 250))
    b.begin("figure")
    parts: list[tuple[Category, Any]] = []
    bottom = y + gh
    if spec.graphics == 1:
        g = BBox(fx0, y, fx1, y + gh)
        b.command("includegraphics", g)
        parts.append((Category.FIGURE_GRAPHIC, g))
    else:
        k = spec.graphics
        sw = (fx1 - fx0 - (k - 1) * 12.0) / k
        for i in range(k):
            sx0 = round(fx0 + i * (sw + 12.0))
            sx1 = round(sx0 + sw)
            g = BBox(sx0, y, sx1, y + gh)
            cw = min(60.0, (sx1 - sx0) * 0.5)
            cx0 = round((sx0 + sx1 - cw) / 2.0)
            cap = BBox(cx0, y + gh + 6, cx0 + round(cw), y + gh + 6 + LINE_H)
            b.begin("subfigure")
            b.command("includegraphics", g)
            b.command("caption")
            b.text(cap)
            b.end("subfigure")
            parts.append((Category.FIGURE, (g, cap)))
        bottom = y + gh + 6 + LINE_H
    cap_lines = _lines(rng, fx0, fx1, bottom + 10, 2)
    b.command("caption")
    for ln in cap_lines:
        b.text(ln)
    b.end("figure")

    boxes = [g if cat is Category.FIGURE_GRAPHIC else union_bbox(g) for cat, g in parts]
    fig = b.add(Category.FIGURE, union_bbox(boxes + cap_lines))
    for cat, geom in parts:
        if cat is Category.FIGURE_GRAPHIC:
            b.add(cat, geom, fig)
        else:
            g, cap = geom
            sub = b.add(Category.FIGURE, union_bbox([g, cap]), fig)
            b.add(Category.FIGURE_GRAPHIC, g, sub)
            b.add(Category.FIGURE_CAPTION, cap, sub)
    _text_entity(b, Category.FIGURE_CAPTION, cap_lines, fig)
    return fig, cap_lines[-1].y1


def _table(b: _Builder, rng: random.Random, spec: FloatSpec, x0: float, x1: float, y: float) -> tuple[str, float]:
    tw = (x1 - x0) * rng.uniform(0.7, 0.95)
    tx0 = round((x0 + x1 - tw) / 2.0)
    tx1 = round(tx0 + tw)
    cap_lines = _lines(rng, tx0, tx1, y, 2)
    ty = cap_lines[-1].y1 + 10
    cw = (tx1 - tx0 - (spec.cols - 1) * 8.0) / spec.cols
    grid = [
        [
            BBox(round(tx0 + j * (cw + 8.0)), ty + i * 30.0, round(tx0 + j * (cw + 8.0) + cw), ty + i * 30.0 + 24.0)
            for j in range(spec.cols)
        ]
        for i in range(spec.rows)
    ]
    b.begin("table")
    b.command("caption")
    for ln in cap_lines:
        b.text(ln)
    b.begin("tabular")
    for row in grid:
        for cell in row:
            b.text(cell)
    b.end("tabular")
    b.end("table")

    cells = [c for row in grid for c in row]
    tab_box = union_bbox(cells)
    table = b.add(Category.TABLE, union_bbox(cap_lines + [tab_box]))
    _text_entity(b, Category.TABLE_CAPTION, cap_lines, table)
    tabular = b.add(Category.TABULAR, tab_box, table)
    if spec.cols >= 2:
        for row in grid:
            b.add(Category.TABLE_ROW, union_bbox(row), tabular)
    if spec.rows >= 2:
        for j in range(spec.cols):
            b.add(Category.TABLE_COLUMN, union_bbox(row[j] for row in grid), tabular)
    for c in cells:
        b.add(Category.TABLE_CELL, c, tabular)
    return table, tab_box.y1


def _place_float(b: _Builder, rng: random.Random, spec: FloatSpec, x0: float, x1: float, y: float) -> tuple[str, float]:
    if spec.kind == "figure":
        return _figure(b, rng, spec, x0, x1, y)
    return _table(b, rng, spec, x0, x1, y)


def _float_orders(b: _Builder) -> None:
    """Children of floats (at any depth) read in plain top-left order."""
    by_id = {e.id: e for e in b.entities}
    kids: dict[str, list[Entity]] = {}
    for c, p in b.parents.items():
        kids.setdefault(p, []).append(by_id[c])

    def under_float(eid: str) -> bool:
        while eid in b.parents:
            eid = b.parents[eid]
            if by_id[eid].category in (Category.FIGURE, Category.TABLE):
                return True
        return False

    for p, members in kids.items():
        if by_id[p].category in (Category.FIGURE, Category.TABLE) or under_float(p):
            b.order[p] = reading_order(members)


def generate_page(spec: PageSpec) -> tuple[DocStructure, list[RenderRecord]]:
    """Ground truth and record stream for one synthetic page."""
    rng = random.Random(spec.seed)
    b = _Builder()
    left, right = MARGIN, PAGE_WIDTH - MARGIN
    if spec.columns == 1:
        cols = [(left, right)]
    else:
        mid = (left + right) / 2.0
        cols = [(left, mid - GUTTER / 2.0), (mid + GUTTER / 2.0, right)]
    roots: list[str] = []
    y = MARGIN

    if spec.abstract:
        ax0, ax1 = (left, right) if spec.columns == 2 else (left + 100, right - 100)
        lines = _lines(rng, ax0, ax1, y, rng.randint(2, 4))
        b.begin("abstract")
        for ln in lines:
            b.text(ln)
        b.end("abstract")
        roots.append(_text_entity(b, Category.ABSTRACT, lines, None))
        y = lines[-1].y1 + BLOCK_GAP

    full = [f for f in spec.floats if f.full_width and spec.columns == 2]
    in_col = [f for f in spec.floats if not (f.full_width and spec.columns == 2)]
    n_seg = len(full) + 1
    per_seg = [
        spec.blocks_per_column // n_seg + (1 if k < spec.blocks_per_column % n_seg else 0) for k in range(n_seg)
    ]
    # items[seg][col] = list of ("block" | FloatSpec)
    items: list[list[list[Any]]] = [[["block"] * per_seg[s] for _ in cols] for s in range(n_seg)]
    for i, f in enumerate(in_col):
        slot = items[i % n_seg][i % len(cols)]
        slot.insert(min(1, len(slot)), f)

    if spec.heading:
        x0, x1 = cols[0]
        hw = round((x1 - x0) * rng.uniform(0.4, 0.6))
        head = BBox(x0, y, x0 + hw, y + 24.0)
        b.command("section", head)
    for s in range(n_seg):
        seg_bottom = y
        for c, (x0, x1) in enumerate(cols):
            cur = y
            if s == 0 and c == 0 and spec.heading:
                roots.append(b.add(Category.HEADING, head))
                cur = head.y1 + BLOCK_GAP
            for it in items[s][c]:
                if it == "block":
                    eid, bottom = _block(b, rng, x0, x1, cur)
                    gap = BLOCK_GAP
                else:
                    eid, bottom = _place_float(b, rng, it, x0, x1, cur)
                    gap = FLOAT_GAP
                roots.append(eid)
                cur = bottom + gap
            seg_bottom = max(seg_bottom, cur)
        y = seg_bottom
        if s < len(full):
            eid, bottom = _place_float(b, rng, full[s], left, right, y)
            roots.append(eid)
            y = bottom + FLOAT_GAP

    height = max(PAGE_HEIGHT, y - FLOAT_GAP + MARGIN)
    if spec.include_meta:
        b.add(Category.HEADER, BBox(left, 40.0, right, 64.0))
        b.add(Category.FOOTER, BBox(left, height - 64.0, right, height - 40.0))
        b.add(Category.PAGE_NUMBER, BBox(PAGE_WIDTH / 2 - 10, height - 90.0, PAGE_WIDTH / 2 + 10, height - 70.0))

    b.order[None] = roots
    _float_orders(b)
    rels = [Relation(p, c, RelationType.PARENT_OF) for c, p in b.parents.items()]
    for seq in b.order.values():
        rels += [Relation(x, y2, RelationType.FOLLOWED_BY) for x, y2 in zip(seq, seq[1:])]
    gt = DocStructure(PAGE_WIDTH, height, tuple(b.entities), tuple(rels))
    return gt, b.records


def _jitter(rng: random.Random, box: BBox, j: float) -> BBox:
    if j <= 0:
        return box
    xs = sorted((box.x0 + rng.uniform(-j, j), box.x1 + rng.uniform(-j, j)))
    ys = sorted((box.y0 + rng.uniform(-j, j), box.y1 + rng.uniform(-j, j)))
    return BBox(xs[0], ys[0], xs[1], ys[1])


def perturb(gt: DocStructure, noise: NoiseSpec, seed: int = 0) -> list[Entity]:
    """Detector-like flat entity list derived from ground truth."""
    rng = random.Random(seed)
    parents = gt.parent_map()
    out: list[Entity] = []
    for e in gt.entities:
        if (
            noise.drop_nested_floats
            and e.category is Category.FIGURE
            and e.id in parents
            and gt.entity(parents[e.id]).category is Category.FIGURE
        ):
            continue
        if rng.random() < noise.drop_rate:
            continue
        cat = e.category
        if rng.random() < noise.relabel_rate:
            cat = rng.choice([c for c in DETECTOR_CATEGORIES if c is not e.category])
        conf = noise.confidence_base + rng.uniform(-noise.confidence_jitter, noise.confidence_jitter)
        conf = min(1.0, max(0.0, conf))
        out.append(Entity(e.id, cat, _jitter(rng, e.bbox, noise.jitter), conf))
        if rng.random() < noise.duplicate_rate:
            out.append(Entity(f"{e.id}d", cat, _jitter(rng, e.bbox, noise.jitter), conf))
    return out


def detections_structure(gt: DocStructure, entities: list[Entity]) -> DocStructure:
    """Relation-free structure holding ``entities`` on ``gt``'s page."""
    return DocStructure(gt.page_width, gt.page_height, tuple(entities), ())


def write_fixture(
    directory: str | os.PathLike,
    spec: PageSpec,
    noise: Optional[NoiseSpec] = None,
    noise_seed: Optional[int] = None,
) -> dict[str, Path]:
    """Write ``gt.json``, ``records.jsonl`` and ``detections.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    gt, records = generate_page(spec)
    dets = perturb(gt, noise or NoiseSpec(), spec.seed if noise_seed is None else noise_seed)
    paths = {"gt": d / "gt.json", "records": d / "records.jsonl", "detections": d / "detections.json"}
    write_text_atomic(paths["gt"], dumps_structure(gt))
    write_text_atomic(paths["records"], dumps_records(records))
    write_text_atomic(paths["detections"], dumps_structure(detections_structure(gt, dets)))
    return paths
