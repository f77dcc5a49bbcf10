"""Weak labels from reverse-render records.

A record stream is the flattened output of a reverse renderer: text line
boxes interleaved with environment begin/end markers and commands. The
pipeline builds an internal forest of :class:`WeakNode` objects, refines it
(equations, sections, content blocks, table parts), cleans it and emits a
flat, noisy :class:`DocStructure`.

Inside the forest a node's ``leaves`` are raw record boxes; its box is the
union of those leaves and its children's boxes.
"""

from __future__ import annotations

import copy
import json
import os
import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator, Mapping, Optional, Sequence

from docstruct.geometry import BBox, contains, union_bbox
from docstruct.grammar import Grammar, default_grammar
from docstruct.model import (
    Category,
    DocStructure,
    Entity,
    Relation,
    RelationType,
    StructureError,
    write_text_atomic,
)
from docstruct.relations import assign_layout_groups, order_entities
from docstruct.tablestruct import rows_cols_from_cells


class WeakLabelError(ValueError):
    """Raised for malformed record streams."""


class TokenKind(str, Enum):
    TEXT_TOKEN = "text_token"
    ENVIRONMENT_BEGIN = "environment_begin"
    ENVIRONMENT_END = "environment_end"
    COMMAND = "command"


@dataclass(frozen=True)
class RenderRecord:
    token_kind: TokenKind
    bbox: Optional[BBox] = None
    page: int = 1
    env_name: Optional[str] = None
    command_name: Optional[str] = None
    nesting_stack: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.token_kind is TokenKind.TEXT_TOKEN and self.bbox is None:
            raise WeakLabelError("text token without bbox")
        if self.token_kind in (TokenKind.ENVIRONMENT_BEGIN, TokenKind.ENVIRONMENT_END) and not self.env_name:
            raise WeakLabelError(f"{self.token_kind.value} without env_name")
        if self.token_kind is TokenKind.COMMAND and not self.command_name:
            raise WeakLabelError("command without command_name")


@dataclass(frozen=True)
class Page:
    width: float
    height: float
    number: int = 1

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("page dimensions must be positive")


@dataclass(frozen=True)
class WeakLabelConfig:
    row_width_frac: float = 0.95  # table child counts as a row at this share of the tabular width
    eq_width_frac: float = 0.7  # formula lines are narrower than this share of the column median
    eq_indent_frac: float = 0.05  # ...and start this far (in median widths) right of the column's x0
    label_align_frac: float = 0.85  # labels start this far across the column
    thin_px: float = 2.0
    centroid_gap: float = 5.0
    tau_ovlp: float = 0.7


@dataclass(frozen=True)
class WeakLabel:
    entity: Entity
    noisy: bool = True


@dataclass
class WeakNode:
    category: Category
    leaves: list[BBox] = field(default_factory=list)
    children: list[WeakNode] = field(default_factory=list)
    separator: bool = False

    @property
    def bbox(self) -> Optional[BBox]:
        boxes = list(self.leaves)
        for c in self.children:
            b = c.bbox
            if b is not None:
                boxes.append(b)
        return union_bbox(boxes) if boxes else None

    def walk(self) -> Iterator[WeakNode]:
        yield self
        for c in self.children:
            yield from c.walk()


def _separator() -> WeakNode:
    return WeakNode(Category.CONTENT_LINE, separator=True)


ENV_CATEGORIES: Mapping[str, Category] = {
    "figure": Category.FIGURE,
    "figure*": Category.FIGURE,
    "subfigure": Category.FIGURE,
    "wrapfigure": Category.FIGURE,
    "table": Category.TABLE,
    "table*": Category.TABLE,
    "tabular": Category.TABULAR,
    "tabular*": Category.TABULAR,
    "tabularx": Category.TABULAR,
    "itemize": Category.ITEMIZE,
    "enumerate": Category.ITEMIZE,
    "description": Category.ITEMIZE,
    "abstract": Category.ABSTRACT,
    "thebibliography": Category.BIBLIOGRAPHY,
    "bibliography": Category.BIBLIOGRAPHY,
}

SECTION_COMMANDS = frozenset(
    {"part", "chapter", "section", "subsection", "subsubsection", "paragraph"}
)

# Nodes whose text arrives as raw leaves rather than content line nodes.
TEXT_HOLDERS = frozenset(
    {Category.FIGURE_CAPTION, Category.TABLE_CAPTION, Category.ITEM, Category.ABSTRACT, Category.HEADING}
)

WHITELIST = frozenset(
    {
        Category.ITEMIZE,
        Category.FIGURE,
        Category.TABLE,
        Category.EQUATION,
        Category.HEADING,
        Category.CONTENT_BLOCK,
        Category.BIBLIOGRAPHY,
        Category.ABSTRACT,
    }
)

_FLOATS = frozenset({Category.FIGURE, Category.TABLE})
_CAPTIONS = frozenset({Category.FIGURE_CAPTION, Category.TABLE_CAPTION})


# --- record I/O -------------------------------------------------------------


def record_to_dict(r: RenderRecord) -> dict[str, Any]:
    d: dict[str, Any] = {"token_kind": r.token_kind.value, "page": r.page}
    if r.bbox is not None:
        d["bbox"] = r.bbox.as_list()
    if r.env_name is not None:
        d["env_name"] = r.env_name
    if r.command_name is not None:
        d["command_name"] = r.command_name
    if r.nesting_stack:
        d["nesting_stack"] = list(r.nesting_stack)
    return d


def record_from_dict(d: Mapping[str, Any]) -> RenderRecord:
    try:
        kind = TokenKind(d["token_kind"])
        bbox = BBox.from_seq(d["bbox"]) if d.get("bbox") is not None else None
        return RenderRecord(
            kind,
            bbox,
            int(d.get("page", 1)),
            d.get("env_name"),
            d.get("command_name"),
            tuple(d.get("nesting_stack", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, WeakLabelError):
            raise
        raise WeakLabelError(f"bad record {dict(d)!r}: {exc}") from exc


def loads_records(text: str) -> list[RenderRecord]:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise WeakLabelError(f"line {n}: invalid JSON: {exc.msg}") from exc
        out.append(record_from_dict(d))
    return out


def dumps_records(records: Iterable[RenderRecord]) -> str:
    return "".join(json.dumps(record_to_dict(r), sort_keys=True) + "\n" for r in records)


def read_records(path: str | os.PathLike) -> list[RenderRecord]:
    with open(path, encoding="utf-8") as fh:
        return loads_records(fh.read())


def write_records(path: str | os.PathLike, records: Iterable[RenderRecord]) -> None:
    write_text_atomic(path, dumps_records(records))


# --- steps 1-2: records to forest -------------------------------------------


@dataclass
class _Scope:
    node: Optional[WeakNode]
    kind: str  # "env" or "cmd"
    name: str


def map_records(records: Iterable[RenderRecord], page_number: Optional[int] = None) -> list[WeakNode]:
    """Build the raw entity forest from a record stream.

    Text tokens become content line nodes, or raw leaves when the enclosing
    scope holds text directly (captions, items, abstracts). Known
    environments and commands open nested nodes; unknown environments are
    transparent. ``caption`` covers the text tokens right after it, ``item``
    runs to the next item, and sectioning commands run to the next
    sectioning command. ``par`` and ``bibitem`` mark paragraph breaks.
    Boxes from pages other than ``page_number`` are ignored, while markers
    from every page keep the scopes balanced.
    """
    roots: list[WeakNode] = []
    stack: list[_Scope] = []

    def holder() -> Optional[WeakNode]:
        for s in reversed(stack):
            if s.node is not None:
                return s.node
        return None

    def container() -> list[WeakNode]:
        h = holder()
        return roots if h is None else h.children

    def innermost_float() -> Optional[Category]:
        for s in reversed(stack):
            if s.node is not None and s.node.category in _FLOATS:
                return s.node.category
        return None

    for r in records:
        on_page = page_number is None or r.page == page_number
        if r.token_kind is not TokenKind.TEXT_TOKEN:
            while stack and stack[-1].kind == "cmd" and stack[-1].name == "caption":
                stack.pop()
        if r.token_kind is TokenKind.TEXT_TOKEN:
            if not on_page:
                continue
            assert r.bbox is not None
            h = holder()
            if h is not None and h.category in TEXT_HOLDERS:
                h.leaves.append(r.bbox)
            else:
                container().append(WeakNode(Category.CONTENT_LINE, [r.bbox]))
        elif r.token_kind is TokenKind.ENVIRONMENT_BEGIN:
            assert r.env_name is not None
            cat = ENV_CATEGORIES.get(r.env_name)
            node = WeakNode(cat) if cat is not None else None
            if node is not None:
                container().append(node)
            stack.append(_Scope(node, "env", r.env_name))
        elif r.token_kind is TokenKind.ENVIRONMENT_END:
            idx = [k for k, s in enumerate(stack) if s.kind == "env" and s.name == r.env_name]
            if not idx:
                raise WeakLabelError(f"unbalanced end of environment {r.env_name!r}")
            del stack[idx[-1]:]
        else:
            name = (r.command_name or "").rstrip("*")
            if name in SECTION_COMMANDS:
                open_sections = [k for k, s in enumerate(stack) if s.kind == "cmd" and s.name == "section"]
                if open_sections and all(s.kind == "cmd" for s in stack[open_sections[-1]:]):
                    del stack[open_sections[-1]:]
                node = WeakNode(Category.SECTION)
                if r.bbox is not None and on_page:
                    node.children.append(WeakNode(Category.HEADING, [r.bbox]))
                container().append(node)
                stack.append(_Scope(node, "cmd", "section"))
            elif name == "item":
                if stack and stack[-1].kind == "cmd" and stack[-1].name == "item":
                    stack.pop()
                node = WeakNode(Category.ITEM)
                container().append(node)
                stack.append(_Scope(node, "cmd", "item"))
            elif name == "caption":
                fl = innermost_float()
                if fl is None:
                    stack.append(_Scope(None, "cmd", "caption"))
                else:
                    cat = Category.FIGURE_CAPTION if fl is Category.FIGURE else Category.TABLE_CAPTION
                    node = WeakNode(cat)
                    container().append(node)
                    stack.append(_Scope(node, "cmd", "caption"))
            elif name == "includegraphics":
                if r.bbox is not None and on_page:
                    container().append(WeakNode(Category.FIGURE_GRAPHIC, [r.bbox]))
            elif name in ("par", "bibitem"):
                container().append(_separator())
            elif r.bbox is not None and on_page:
                container().append(WeakNode(Category.CONTENT_LINE, [r.bbox]))
    unclosed = [s.name for s in stack if s.kind == "env"]
    if unclosed:
        raise WeakLabelError(f"unclosed environments: {unclosed}")
    return roots


# --- step 3: equations ------------------------------------------------------


@dataclass(frozen=True)
class ColumnStats:
    x0: float
    x1: float
    width: float
    count: int = 0


def _group_of(b: BBox, page_width: float, tau: float) -> str:
    g = assign_layout_groups([Entity("_", Category.CONTENT_LINE, b)], page_width, tau)
    return "left" if g.left else "right" if g.right else "center"


def _is_line(n: WeakNode) -> bool:
    return n.category is Category.CONTENT_LINE and not n.separator and not n.children and len(n.leaves) == 1


def column_line_stats(lines: Iterable[BBox], page_width: float, tau_ovlp: float = 0.7) -> dict[str, ColumnStats]:
    """Median x0, x1 and width of the content lines in each layout group."""
    groups: dict[str, list[BBox]] = {}
    for b in lines:
        groups.setdefault(_group_of(b, page_width, tau_ovlp), []).append(b)
    return {
        g: ColumnStats(
            statistics.median(b.x0 for b in bs),
            statistics.median(b.x1 for b in bs),
            statistics.median(b.width for b in bs),
            len(bs),
        )
        for g, bs in groups.items()
    }


def detect_equations(
    nodes: Sequence[WeakNode],
    stats: Mapping[str, ColumnStats],
    page_width: float,
    config: Optional[WeakLabelConfig] = None,
) -> list[WeakNode]:
    """Relabel runs of narrow, indented lines in a sibling list as equations.

    A line is a candidate when it is narrower than ``eq_width_frac`` of its
    column's median line width and starts more than ``eq_indent_frac``
    median widths right of the column's median x0. Consecutive candidates in
    one column form an equation. Inside a run, a candidate starting at
    ``label_align_frac`` across the column and sharing vertical extent with
    another candidate is the label; the rest are formula lines.
    """
    cfg = config or WeakLabelConfig()

    def column(b: BBox) -> str:
        # the busiest measured column holding the box center; a short
        # right-aligned label in a single-column page belongs to that column
        cx = (b.x0 + b.x1) / 2.0
        hits = [(-s.count, g) for g, s in stats.items() if s.x0 <= cx <= s.x1]
        return min(hits)[1] if hits else _group_of(b, page_width, cfg.tau_ovlp)

    def candidate(n: WeakNode) -> Optional[str]:
        if not _is_line(n):
            return None
        b = n.leaves[0]
        g = column(b)
        s = stats.get(g)
        if s is None or s.width <= 0:
            return None
        if b.width < cfg.eq_width_frac * s.width and b.x0 > s.x0 + cfg.eq_indent_frac * s.width:
            return g
        return None

    out: list[WeakNode] = []
    run: list[WeakNode] = []
    run_group: Optional[str] = None

    def flush() -> None:
        nonlocal run, run_group
        if run:
            out.append(_equation(run, stats[run_group], cfg))  # type: ignore[index]
        run, run_group = [], None

    for n in nodes:
        g = candidate(n)
        if g is None or (run and g != run_group):
            flush()
        if g is None:
            out.append(n)
        else:
            run.append(n)
            run_group = g
    flush()
    return out


def _equation(run: list[WeakNode], s: ColumnStats, cfg: WeakLabelConfig) -> WeakNode:
    boxes = [n.leaves[0] for n in run]
    edge = s.x0 + cfg.label_align_frac * (s.x1 - s.x0)
    right = [b.x0 >= edge for b in boxes]
    labels = []
    for k, b in enumerate(boxes):
        if right[k] and any(
            not right[m] and min(b.y1, o.y1) > max(b.y0, o.y0) for m, o in enumerate(boxes)
        ):
            labels.append(k)
    kids = [
        WeakNode(Category.EQUATION_LABEL if k in labels else Category.EQUATION_FORMULA, [b])
        for k, b in enumerate(boxes)
    ]
    return WeakNode(Category.EQUATION, children=kids)


# --- steps 4-5: sections and blocks -----------------------------------------


def _split_blocks(
    nodes: Sequence[WeakNode], block_cat: Category, page_width: float, tau: float
) -> list[WeakNode]:
    out: list[WeakNode] = []
    run: list[WeakNode] = []

    def flush() -> None:
        # A run breaks where it jumps between the left and right column;
        # centered lines (full-width or short) join the current side.
        pieces: list[list[WeakNode]] = []
        side = None
        for n in run:
            g = _group_of(n.leaves[0], page_width, tau)
            if not pieces or (g != "center" and side is not None and g != side):
                pieces.append([])
                side = None
            pieces[-1].append(n)
            if g != "center":
                side = g
        for piece in pieces:
            lines = sorted(piece, key=lambda n: (n.leaves[0].y0, n.leaves[0].x0))
            out.append(WeakNode(block_cat, children=lines))
        run.clear()

    for n in nodes:
        if n.separator:
            flush()
        elif _is_line(n):
            run.append(n)
        else:
            flush()
            out.append(n)
    flush()
    return out


def _strip_separators(nodes: list[WeakNode]) -> list[WeakNode]:
    out = []
    for n in nodes:
        if n.separator:
            continue
        n.children = _strip_separators(n.children)
        out.append(n)
    return out


def build_sections_and_blocks(
    forest: list[WeakNode],
    page_width: float,
    config: Optional[WeakLabelConfig] = None,
) -> list[WeakNode]:
    """Detect equations and group content lines into blocks.

    Works at the top level and inside sections. Runs of consecutive content
    lines (cut at paragraph marks and at any other entity) are split by page
    column and become content blocks; inside a bibliography they become
    bibliography blocks. Sections themselves come from :func:`map_records`.
    """
    cfg = config or WeakLabelConfig()
    forest = copy.deepcopy(forest)
    flow_lines = []

    def collect(nodes: Sequence[WeakNode]) -> None:
        for n in nodes:
            if _is_line(n):
                flow_lines.append(n.leaves[0])
            elif n.category is Category.SECTION:
                collect(n.children)

    collect(forest)
    stats = column_line_stats(flow_lines, page_width, cfg.tau_ovlp)

    def process(nodes: list[WeakNode], block_cat: Category, equations: bool) -> list[WeakNode]:
        for n in nodes:
            if n.category is Category.SECTION:
                n.children = process(n.children, Category.CONTENT_BLOCK, True)
            elif n.category is Category.BIBLIOGRAPHY:
                n.children = process(n.children, Category.BIBLIOGRAPHY_BLOCK, False)
        if equations:
            nodes = detect_equations(nodes, stats, page_width, cfg)
        return _split_blocks(nodes, block_cat, page_width, cfg.tau_ovlp)

    return _strip_separators(process(forest, Category.CONTENT_BLOCK, True))


# --- steps 6-7: tables ------------------------------------------------------


def classify_table_children(
    children: Sequence[WeakNode], tabular_bbox: BBox, config: Optional[WeakLabelConfig] = None
) -> list[WeakNode]:
    """Label tabular content lines as rows (spanning the tabular) or cells.

    Captions and other non-line children pass through unchanged.
    """
    cfg = config or WeakLabelConfig()
    out = []
    for n in children:
        if _is_line(n):
            wide = n.leaves[0].width >= cfg.row_width_frac * tabular_bbox.width
            n = WeakNode(Category.TABLE_ROW if wide else Category.TABLE_CELL, list(n.leaves))
        out.append(n)
    return out


def synthesize_rows_cols(cells: Sequence[WeakNode], gap: float = 5.0) -> list[WeakNode]:
    """Row and column nodes derived from cell centroids."""
    boxes = [c.bbox for c in cells if c.bbox is not None]
    rows, cols = rows_cols_from_cells(boxes, gap)
    return [WeakNode(Category.TABLE_ROW, [r]) for r in rows] + [
        WeakNode(Category.TABLE_COLUMN, [c]) for c in cols
    ]


def _process_tables(forest: list[WeakNode], cfg: WeakLabelConfig) -> None:
    for root in forest:
        for n in root.walk():
            if n.category is not Category.TABULAR:
                continue
            tb = n.bbox
            if tb is None:
                continue
            kids = classify_table_children(n.children, tb, cfg)
            cells = [k for k in kids if k.category is Category.TABLE_CELL]
            n.children = kids + synthesize_rows_cols(cells, cfg.centroid_gap)


# --- steps 8-10 and dismissal -----------------------------------------------


def _off_page(b: BBox, page: Page) -> bool:
    return b.x0 < 0 or b.y0 < 0 or b.x1 > page.width or b.y1 > page.height


def _bad(b: BBox, page: Page) -> bool:
    return b.area <= 0 or _off_page(b, page)


def _thin(b: BBox, px: float) -> bool:
    return b.width <= px or b.height <= px


def _prune(node: WeakNode, in_float: bool, page: Page, cfg: WeakLabelConfig) -> Optional[WeakNode]:
    leaves: list[BBox] = []
    for b in node.leaves:
        if _bad(b, page) or (in_float and _thin(b, cfg.thin_px)) or b in leaves:
            continue
        leaves.append(b)
    inner = in_float or node.category in _FLOATS
    kids = [k for k in (_prune(c, inner, page, cfg) for c in node.children) if k is not None]
    if node.category in _FLOATS:
        others = [k.bbox for k in kids if k.category not in _CAPTIONS]
        kids = [
            k
            for k in kids
            if k.category not in _CAPTIONS or not any(contains(k.bbox, o) for o in others)  # type: ignore[arg-type]
        ]
    node.leaves, node.children = leaves, kids
    b = node.bbox
    if b is None or _bad(b, page) or (in_float and _thin(b, cfg.thin_px)):
        return None
    return node


def _wrap_leaves(node: WeakNode) -> None:
    for c in node.children:
        _wrap_leaves(c)
    if len(node.leaves) > 1 or (node.leaves and node.children):
        node.children.extend(WeakNode(Category.CONTENT_LINE, [b]) for b in node.leaves)
        node.leaves = []


def _dedupe(forest: list[WeakNode]) -> list[WeakNode]:
    seen: set[tuple[Category, BBox]] = set()

    def walk(nodes: list[WeakNode], ancestors: frozenset) -> list[WeakNode]:
        out: list[WeakNode] = []
        for n in nodes:
            key = (n.category, n.bbox)
            if key in seen:
                if key in ancestors:
                    out.extend(walk(n.children, ancestors))
                continue
            seen.add(key)  # type: ignore[arg-type]
            n.children = walk(n.children, ancestors | {key})
            out.append(n)
        return out

    return walk(forest, frozenset())


def _whitelist(nodes: list[WeakNode]) -> list[WeakNode]:
    out: list[WeakNode] = []
    for n in nodes:
        if n.category in WHITELIST:
            out.append(n)
        else:
            out.extend(_whitelist(n.children))
    return out


def _fingerprint(nodes: Sequence[WeakNode]) -> tuple:
    return tuple(
        (n.category.value, tuple(b.as_list().__repr__() for b in n.leaves), _fingerprint(n.children))
        for n in nodes
    )


def clean_labels(
    forest: Sequence[WeakNode], page: Page, config: Optional[WeakLabelConfig] = None
) -> list[WeakNode]:
    """Remove noisy entities until nothing changes.

    One round drops off-page and zero-area boxes, thin float children,
    captions enclosing non-caption siblings, repeated raw boxes and nodes
    left without any leaf; then wraps excess leaves in content lines, drops
    duplicate (category, box) nodes and keeps only whitelisted top-level
    trees. Removals run before wrapping so that a dropped box never leaves
    behind a wrapper it caused.
    """
    cfg = config or WeakLabelConfig()
    current = copy.deepcopy(list(forest))
    fp = _fingerprint(current)
    for _ in range(64):
        current = [k for k in (_prune(n, False, page, cfg) for n in current) if k is not None]
        for n in current:
            _wrap_leaves(n)
        current = _whitelist(_dedupe(current))
        nxt = _fingerprint(current)
        if nxt == fp:
            break
        fp = nxt
    return current


# --- output -----------------------------------------------------------------


def _sort_key(n: WeakNode) -> tuple:
    b = n.bbox
    assert b is not None
    return (b.y0, b.x0, b.y1, b.x1, n.category.value)


def forest_to_structure(
    forest: Sequence[WeakNode],
    page: Page,
    grammar: Optional[Grammar] = None,
    tau_ovlp: float = 0.7,
) -> tuple[list[WeakLabel], DocStructure]:
    """Flatten a forest into labels and a structure with ids ``w0001``...

    Ids follow a depth-first walk with siblings in top-to-bottom,
    left-to-right order; followed_by comes from the standard ordering rules.
    """
    entities: list[Entity] = []
    parents: dict[str, str] = {}

    def visit(nodes: Sequence[WeakNode], parent: Optional[str]) -> None:
        for n in sorted(nodes, key=_sort_key):
            b = n.bbox
            assert b is not None
            eid = f"w{len(entities) + 1:04d}"
            entities.append(Entity(eid, n.category, b))
            if parent is not None:
                parents[eid] = parent
            visit(n.children, eid)

    visit(forest, None)
    rels = [Relation(p, c, RelationType.PARENT_OF) for c, p in parents.items()]
    rels += order_entities(entities, page.width, tau_ovlp, parents=parents, grammar=grammar or default_grammar())
    s = DocStructure(page.width, page.height, tuple(entities), tuple(rels))
    return [WeakLabel(e) for e in s.entities], s


def generate_weak_labels(
    records: Iterable[RenderRecord],
    page: Page,
    config: Optional[WeakLabelConfig] = None,
    grammar: Optional[Grammar] = None,
) -> tuple[list[WeakLabel], DocStructure]:
    """Full pipeline from a record stream to noisy labels for one page."""
    cfg = config or WeakLabelConfig()
    forest = map_records(records, page.number)
    forest = build_sections_and_blocks(forest, page.width, cfg)
    _process_tables(forest, cfg)
    forest = clean_labels(forest, page, cfg)
    try:
        return forest_to_structure(forest, page, grammar, cfg.tau_ovlp)
    except StructureError as exc:  # pragma: no cover - forest output is a tree by construction
        raise WeakLabelError(str(exc)) from exc
