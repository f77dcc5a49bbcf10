"""Entities, relations and document structures, plus their JSON file format."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

from docstruct.geometry import BBox


class StructureError(ValueError):
    """Raised for malformed structures or structure files."""


class Category(str, Enum):
    # detector categories
    CONTENT_BLOCK = "content_block"
    TABLE = "table"
    TABLE_ROW = "table_row"
    TABLE_COLUMN = "table_column"
    TABLE_CELL = "table_cell"
    TABULAR = "tabular"
    FIGURE = "figure"
    HEADING = "heading"
    ABSTRACT = "abstract"
    EQUATION = "equation"
    ITEMIZE = "itemize"
    ITEM = "item"
    BIBLIOGRAPHY_BLOCK = "bibliography_block"
    TABLE_CAPTION = "table_caption"
    FIGURE_GRAPHIC = "figure_graphic"
    FIGURE_CAPTION = "figure_caption"
    HEADER = "header"
    FOOTER = "footer"
    PAGE_NUMBER = "page_number"
    DATE = "date"
    KEYWORDS = "keywords"
    AUTHOR = "author"
    AFFILIATION = "affiliation"
    # weak-label categories
    CONTENT_LINE = "content_line"
    SECTION = "section"
    BIBLIOGRAPHY = "bibliography"
    EQUATION_FORMULA = "equation_formula"
    EQUATION_LABEL = "equation_label"
    # dataset-only; no heuristic consumes these
    CODE = "code"
    TITLE = "title"

    def __str__(self) -> str:
        return self.value


DETECTOR_CATEGORIES: tuple[Category, ...] = tuple(Category)[:23]


class RelationType(str, Enum):
    PARENT_OF = "parent_of"
    FOLLOWED_BY = "followed_by"
    NULL = "null"

    def __str__(self) -> str:
        return self.value


CellRange = tuple[int, int, int, int]


@dataclass(frozen=True)
class Entity:
    """A typed region of a page.

    ``confidence`` is set on detector output and left ``None`` on ground
    truth. ``cell_range`` is ``(row_start, row_end, col_start, col_end)``,
    inclusive and zero-based, and only valid on table cells.
    """

    id: str
    category: Category
    bbox: BBox
    confidence: Optional[float] = None
    cell_range: Optional[CellRange] = None

    def __post_init__(self) -> None:
        if not isinstance(self.category, Category):
            object.__setattr__(self, "category", Category(self.category))
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise StructureError(f"{self.id}: confidence {self.confidence} outside [0, 1]")
        if self.cell_range is not None:
            if self.category is not Category.TABLE_CELL:
                raise StructureError(f"{self.id}: cell_range on a {self.category}")
            rs, re, cs, ce = self.cell_range
            if not (0 <= rs <= re and 0 <= cs <= ce):
                raise StructureError(f"{self.id}: bad cell_range {self.cell_range}")
            object.__setattr__(self, "cell_range", (int(rs), int(re), int(cs), int(ce)))

    def with_bbox(self, bbox: BBox) -> Entity:
        return Entity(self.id, self.category, bbox, self.confidence, self.cell_range)


@dataclass(frozen=True, order=True)
class Relation:
    subject: str
    object: str
    rel_type: RelationType

    def __post_init__(self) -> None:
        if not isinstance(self.rel_type, RelationType):
            object.__setattr__(self, "rel_type", RelationType(self.rel_type))
        if self.subject == self.object:
            raise StructureError(f"relation from {self.subject} to itself")


def _relation_key(r: Relation) -> tuple[str, str, str]:
    return (r.rel_type.value, r.subject, r.object)


@dataclass(frozen=True)
class DocStructure:
    """Entities and relations of one page.

    Entities are kept sorted by id and relations by (type, subject, object)
    so that equal structures compare and serialize identically.
    """

    page_width: float
    page_height: float
    entities: tuple[Entity, ...] = ()
    relations: tuple[Relation, ...] = ()
    _index: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ents = tuple(sorted(self.entities, key=lambda e: e.id))
        index: dict[str, Entity] = {}
        for e in ents:
            if e.id in index:
                raise StructureError(f"duplicate entity id {e.id!r}")
            index[e.id] = e
        object.__setattr__(self, "entities", ents)
        object.__setattr__(self, "relations", tuple(sorted(set(self.relations), key=_relation_key)))
        object.__setattr__(self, "_index", index)

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self._index

    def entity(self, entity_id: str) -> Entity:
        try:
            return self._index[entity_id]
        except KeyError:
            raise StructureError(f"unknown entity id {entity_id!r}") from None

    def of_type(self, rel_type: RelationType) -> list[Relation]:
        return [r for r in self.relations if r.rel_type is rel_type]

    def parent_map(self) -> dict[str, str]:
        """child id -> parent id; first parent wins on malformed input."""
        out: dict[str, str] = {}
        for r in self.of_type(RelationType.PARENT_OF):
            out.setdefault(r.object, r.subject)
        return out

    def roots(self) -> list[str]:
        parents = self.parent_map()
        return [e.id for e in self.entities if e.id not in parents]


def _yx_key(e: Entity) -> tuple[float, float, str]:
    return (e.bbox.y0, e.bbox.x0, e.id)


def _chain_order(s: DocStructure, ids: list[str]) -> list[str]:
    members = set(ids)
    succ: dict[str, str] = {}
    has_pred: set[str] = set()
    for r in s.of_type(RelationType.FOLLOWED_BY):
        if r.subject in members and r.object in members:
            succ.setdefault(r.subject, r.object)
            has_pred.add(r.object)
    linked = set(succ) | has_pred
    heads = sorted((s.entity(i) for i in linked if i not in has_pred), key=_yx_key)
    out: list[str] = []
    seen: set[str] = set()
    for head in heads:
        cur: Optional[str] = head.id
        while cur is not None and cur not in seen:
            seen.add(cur)
            out.append(cur)
            cur = succ.get(cur)
    rest = sorted((s.entity(i) for i in ids if i not in seen), key=_yx_key)
    out.extend(e.id for e in rest)
    return out


def children(s: DocStructure, entity_id: str) -> list[str]:
    """Direct children of ``entity_id`` in followed_by order.

    Children not reachable through the chain are appended in (y, x) order.
    """
    s.entity(entity_id)
    kids = [r.object for r in s.of_type(RelationType.PARENT_OF) if r.subject == entity_id]
    return _chain_order(s, kids)


def ordered_roots(s: DocStructure) -> list[str]:
    return _chain_order(s, s.roots())


@dataclass(frozen=True, order=True)
class Violation:
    """One broken structural rule, named by the offending entity."""

    entity: str
    rule: str
    detail: str = ""


def validate_structure(s: DocStructure, meta: Optional[Iterable[Category]] = None) -> list[Violation]:
    """Check the forest and sibling-chain invariants; returns [] when valid.

    ``meta`` lists categories that must not take part in relations; it
    defaults to the meta categories of the bundled grammar.
    """
    if meta is None:
        from docstruct.grammar import META_CATEGORIES

        meta = META_CATEGORIES
    meta = set(meta)
    out: list[Violation] = []
    parents: dict[str, list[str]] = {}
    succ: dict[str, list[str]] = {}
    pred: dict[str, list[str]] = {}
    for r in s.relations:
        missing = [i for i in (r.subject, r.object) if i not in s]
        if missing:
            for i in missing:
                out.append(Violation(i, "unknown entity", f"{r.rel_type} {r.subject}->{r.object}"))
            continue
        endpoint_meta = [i for i in (r.subject, r.object) if s.entity(i).category in meta]
        if r.rel_type is RelationType.NULL:
            if not endpoint_meta:
                out.append(Violation(r.subject, "null relation", f"between non-meta {r.subject}, {r.object}"))
            continue
        for i in endpoint_meta:
            out.append(Violation(i, "meta relation", f"{r.rel_type} {r.subject}->{r.object}"))
        if r.rel_type is RelationType.PARENT_OF:
            parents.setdefault(r.object, []).append(r.subject)
        else:
            succ.setdefault(r.subject, []).append(r.object)
            pred.setdefault(r.object, []).append(r.subject)

    for child, ps in parents.items():
        if len(ps) > 1:
            out.append(Violation(child, "multiple parents", ", ".join(sorted(ps))))
    parent_of = {c: sorted(ps)[0] for c, ps in parents.items()}

    reported: set[str] = set()
    for start in sorted(parent_of):
        path: list[str] = []
        on_path: set[str] = set()
        cur: Optional[str] = start
        while cur is not None and cur not in on_path and cur not in reported:
            on_path.add(cur)
            path.append(cur)
            cur = parent_of.get(cur)
        if cur is not None and cur in on_path:
            cycle = path[path.index(cur):]
            out.append(Violation(min(cycle), "parent cycle", " -> ".join(cycle)))
        reported.update(path)

    for a, bs in succ.items():
        if len(bs) > 1:
            out.append(Violation(a, "multiple successors", ", ".join(sorted(bs))))
        for b in bs:
            if parent_of.get(a) != parent_of.get(b):
                out.append(Violation(a, "cross-parent ordering", f"{a}->{b}"))
    for b, as_ in pred.items():
        if len(as_) > 1:
            out.append(Violation(b, "multiple predecessors", ", ".join(sorted(as_))))

    next_of = {a: sorted(bs)[0] for a, bs in succ.items()}
    done: set[str] = set()
    for start in sorted(next_of):
        path = []
        on_path = set()
        cur = start
        while cur is not None and cur not in on_path and cur not in done:
            on_path.add(cur)
            path.append(cur)
            cur = next_of.get(cur)
        if cur is not None and cur in on_path:
            cycle = path[path.index(cur):]
            out.append(Violation(min(cycle), "ordering cycle", " -> ".join(cycle)))
        done.update(path)
    return sorted(out)


# --- JSON file format -------------------------------------------------------


def entity_to_dict(e: Entity) -> dict[str, Any]:
    d: dict[str, Any] = {"id": e.id, "category": e.category.value, "bbox": e.bbox.as_list()}
    if e.confidence is not None:
        d["confidence"] = e.confidence
    if e.cell_range is not None:
        d["cell_range"] = list(e.cell_range)
    return d


def entity_from_dict(d: Mapping[str, Any]) -> Entity:
    try:
        cat = Category(d["category"])
    except ValueError:
        raise StructureError(f"unknown category {d['category']!r}") from None
    bbox = d["bbox"]
    if len(bbox) != 4:
        raise StructureError(f"{d['id']}: bbox needs 4 numbers")
    cr = d.get("cell_range")
    conf = d.get("confidence")
    return Entity(
        id=str(d["id"]),
        category=cat,
        bbox=BBox.from_seq(bbox),
        confidence=None if conf is None else float(conf),
        cell_range=None if cr is None else tuple(int(v) for v in cr),  # type: ignore[arg-type]
    )


def structure_to_dict(s: DocStructure, noisy: bool = False) -> dict[str, Any]:
    d: dict[str, Any] = {
        "page": {"width": s.page_width, "height": s.page_height},
        "entities": [entity_to_dict(e) for e in s.entities],
        "relations": [
            {"subject": r.subject, "object": r.object, "type": r.rel_type.value}
            for r in s.relations
        ],
    }
    if noisy:
        d["noisy"] = True
    return d


def structure_from_dict(d: Mapping[str, Any]) -> DocStructure:
    try:
        page = d["page"]
        return DocStructure(
            page_width=float(page["width"]),
            page_height=float(page["height"]),
            entities=tuple(entity_from_dict(e) for e in d.get("entities", [])),
            relations=tuple(
                Relation(r["subject"], r["object"], RelationType(r["type"]))
                for r in d.get("relations", [])
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, StructureError):
            raise
        raise StructureError(f"malformed structure: {exc!r}") from exc


def dumps_structure(s: DocStructure, noisy: bool = False) -> str:
    return json.dumps(structure_to_dict(s, noisy=noisy), indent=2) + "\n"


def loads_structure(text: str) -> DocStructure:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise StructureError("structure file must hold a JSON object")
    return structure_from_dict(data)


def read_structure(path: str | os.PathLike) -> DocStructure:
    return loads_structure(Path(path).read_text(encoding="utf-8"))


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_structure(path: str | os.PathLike, s: DocStructure, noisy: bool = False) -> None:
    write_text_atomic(path, dumps_structure(s, noisy=noisy))
