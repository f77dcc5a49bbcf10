"""Turn a flat list of detected entities into parent_of / followed_by relations.

Nesting runs four passes over candidate pairs: geometric overlap, grammar
check, reduction to direct children and unique-parent selection. Ordering
groups entities into left, center and right page regions and reads them
top-to-bottom, left-to-right.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from docstruct import kernels
from docstruct.geometry import BBox, horizontal_overlap, safe_iou
from docstruct.grammar import Grammar, default_grammar
from docstruct.model import DocStructure, Entity, Relation, RelationType, StructureError

log = logging.getLogger(__name__)

Pair = tuple[str, str]


@dataclass(frozen=True)
class NestingThresholds:
    theta1: float = 0.45
    theta2: float = 1.2

    def __post_init__(self) -> None:
        if not 0.0 < self.theta1 <= 1.0:
            raise ValueError(f"theta1 must lie in (0, 1], got {self.theta1}")
        if not self.theta2 > 1.0:
            raise ValueError(f"theta2 must exceed 1, got {self.theta2}")


@dataclass(frozen=True)
class LayoutGroups:
    left: tuple[str, ...]
    center: tuple[str, ...]
    right: tuple[str, ...]
    tau_ovlp: float = 0.7


def _by_id(entities: Iterable[Entity]) -> dict[str, Entity]:
    out: dict[str, Entity] = {}
    for e in entities:
        if e.id in out:
            raise StructureError(f"duplicate entity id {e.id!r}")
        out[e.id] = e
    return out


# --- nesting ----------------------------------------------------------------


def nesting_candidates(
    entities: Sequence[Entity], thresholds: Optional[NestingThresholds] = None
) -> list[Pair]:
    """Pairs (subject, object) where the subject encloses the object.

    Full containment always qualifies; partial overlap qualifies when at
    least ``theta1`` of the object is covered and the subject is more than
    ``theta2`` times larger. Zero-area objects are skipped with a warning.
    """
    th = thresholds or NestingThresholds()
    for e in entities:
        if e.bbox.area <= 0.0:
            log.warning("skipping zero-area entity %s as nesting object", e.id)
    idx = kernels.nesting_pairs([e.bbox for e in entities], th.theta1, th.theta2)
    return sorted((entities[i].id, entities[j].id) for i, j in idx)


def grammar_filter(
    candidates: Iterable[Pair], entities: Iterable[Entity], grammar: Optional[Grammar] = None
) -> list[Pair]:
    """Drop candidate pairs the grammar does not allow."""
    g = grammar or default_grammar()
    cat = {e.id: e.category for e in entities}
    return [(s, o) for s, o in candidates if g.allowed_child(cat[s], cat[o])]


def break_cycles(
    candidates: Iterable[Pair], entities: Iterable[Entity], grammar: Optional[Grammar] = None
) -> list[Pair]:
    """Make the candidate relation acyclic.

    Mutual containment only happens for identical boxes. For such pairs the
    direction the grammar allows wins; otherwise the larger box, then the
    smaller id, is the subject. If a custom grammar still leaves a cycle,
    the (area, id) order alone decides.
    """
    by_id = {e.id: e for e in entities}
    cands = set(candidates)

    def rank(i: str) -> tuple[float, str]:
        return (-by_id[i].bbox.area, i)

    out: set[Pair] = set()
    for s, o in cands:
        if (o, s) not in cands:
            out.add((s, o))
            continue
        if grammar is not None:
            fwd = grammar.allowed_child(by_id[s].category, by_id[o].category)
            bwd = grammar.allowed_child(by_id[o].category, by_id[s].category)
            if fwd != bwd:
                if fwd:
                    out.add((s, o))
                continue
        if rank(s) < rank(o):
            out.add((s, o))
    if _has_cycle(out):
        out = {(s, o) for s, o in cands if (o, s) not in cands or rank(s) < rank(o)}
    return sorted(out)


def _has_cycle(edges: Iterable[Pair]) -> bool:
    try:
        _topological_order(edges)
    except StructureError:
        return True
    return False


def _topological_order(edges: Iterable[Pair]) -> list[str]:
    succ: dict[str, list[str]] = {}
    indeg: dict[str, int] = {}
    for s, o in edges:
        succ.setdefault(s, []).append(o)
        succ.setdefault(o, [])
        indeg[o] = indeg.get(o, 0) + 1
        indeg.setdefault(s, 0)
    ready = sorted(n for n, d in indeg.items() if d == 0)
    order: list[str] = []
    while ready:
        n = ready.pop()
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    if len(order) != len(indeg):
        raise StructureError("candidate relation has a cycle")
    return order


def prune_to_direct_children(candidates: Iterable[Pair]) -> list[Pair]:
    """Transitive reduction: drop (a, c) whenever c is reachable from a
    through some other candidate. The relation must be acyclic."""
    edges = sorted(set(candidates))
    order = _topological_order(edges)
    bit = {n: 1 << k for k, n in enumerate(order)}
    succ: dict[str, list[str]] = {n: [] for n in order}
    for s, o in edges:
        succ[s].append(o)
    reach: dict[str, int] = {}
    for n in reversed(order):
        acc = 0
        for m in succ[n]:
            acc |= bit[m] | reach[m]
        reach[n] = acc
    out = []
    for s, o in edges:
        via = 0
        for m in succ[s]:
            if m != o:
                via |= reach[m]
        if not via & bit[o]:
            out.append((s, o))
    return out


def resolve_unique_parents(candidates: Iterable[Pair], entities: Iterable[Entity]) -> list[Pair]:
    """Keep one parent per object.

    Preference: highest IoU with the object, then highest confidence, then
    largest box, then smallest id.
    """
    by_id = {e.id: e for e in entities}
    parents: dict[str, list[str]] = {}
    for s, o in candidates:
        parents.setdefault(o, []).append(s)
    out = []
    for o, ps in parents.items():
        if len(ps) == 1:
            out.append((ps[0], o))
            continue
        ob = by_id[o].bbox

        def key(p: str) -> tuple[float, float, float, str]:
            e = by_id[p]
            conf = -1.0 if e.confidence is None else e.confidence
            return (-safe_iou(e.bbox, ob), -conf, -e.bbox.area, p)

        out.append((min(ps, key=key), o))
    return sorted(out)


def nest(
    entities: Sequence[Entity],
    grammar: Optional[Grammar] = None,
    thresholds: Optional[NestingThresholds] = None,
    use_grammar: bool = True,
) -> list[Pair]:
    """Full nesting pipeline; ``use_grammar=False`` skips the grammar check
    (the grammar still orients identical-box pairs)."""
    g = grammar or default_grammar()
    cands = nesting_candidates(entities, thresholds)
    if use_grammar:
        cands = grammar_filter(cands, entities, g)
    cands = break_cycles(cands, entities, g)
    cands = prune_to_direct_children(cands)
    return resolve_unique_parents(cands, entities)


# --- ordering ---------------------------------------------------------------


def assign_layout_groups(
    entities: Iterable[Entity], page_width: float, tau_ovlp: float = 0.7, page_left: float = 0.0
) -> LayoutGroups:
    """Split entities into left / center / right by horizontal overlap with
    the page halves, relative to each box's own width."""
    if page_width <= 0:
        raise ValueError("page_width must be positive")
    mid = page_left + page_width / 2.0
    right_edge = page_left + page_width
    left, center, right = [], [], []
    for e in entities:
        b = e.bbox
        w = b.width
        if w <= 0.0:
            side = -1 if b.x0 < mid else (1 if b.x0 > mid else 0)
        else:
            lr = horizontal_overlap(b, page_left, mid) / w
            rr = horizontal_overlap(b, mid, right_edge) / w
            side = -1 if lr > tau_ovlp else (1 if rr > tau_ovlp else 0)
        (left if side < 0 else right if side > 0 else center).append(e.id)
    return LayoutGroups(tuple(left), tuple(center), tuple(right), tau_ovlp)


def _yx(e: Entity) -> tuple[float, float, str]:
    return (e.bbox.y0, e.bbox.x0, e.id)


def reading_order(entities: Iterable[Entity]) -> list[str]:
    """Top-to-bottom, then left-to-right by top-left corner; ties by id."""
    return [e.id for e in sorted(entities, key=_yx)]


def _merged_extents(boxes: Iterable[BBox]) -> list[tuple[float, float]]:
    spans = sorted((b.y0, b.y1) for b in boxes)
    merged: list[tuple[float, float]] = []
    for a, b in spans:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def _band_index(b: BBox, extents: list[tuple[float, float]]) -> int:
    mid = (b.y0 + b.y1) / 2.0
    for k, (top, bottom) in enumerate(extents):
        if mid < top:
            return 2 * k
        if mid <= bottom:
            return 2 * k + 1
    return 2 * len(extents)


def layout_order(
    entities: Sequence[Entity], page_width: float, tau_ovlp: float = 0.7, page_left: float = 0.0
) -> list[str]:
    """Reading order of one sibling set, column-aware.

    Without center entities the left column precedes the right one. With
    center entities the page is cut into horizontal bands: each merged
    vertical extent of center entities is a band, and so is each gap
    between them. Bands are read top-down; inside a band left, center and
    right groups follow each other.
    """
    if not entities:
        return []
    by_id = {e.id: e for e in entities}
    groups = assign_layout_groups(entities, page_width, tau_ovlp, page_left)
    left = [by_id[i] for i in groups.left]
    center = [by_id[i] for i in groups.center]
    right = [by_id[i] for i in groups.right]
    if not center:
        return reading_order(left) + reading_order(right)
    extents = _merged_extents(e.bbox for e in center)
    bands: dict[int, tuple[list[Entity], list[Entity], list[Entity]]] = {}
    for slot, members in enumerate((left, center, right)):
        for e in members:
            bands.setdefault(_band_index(e.bbox, extents), ([], [], []))[slot].append(e)
    out: list[str] = []
    for k in sorted(bands):
        for members in bands[k]:
            out.extend(reading_order(members))
    return out


def order_entities(
    entities: Sequence[Entity],
    page_width: float,
    tau_ovlp: float = 0.7,
    *,
    parents: Optional[Mapping[str, str]] = None,
    grammar: Optional[Grammar] = None,
    page_left: float = 0.0,
) -> list[Relation]:
    """followed_by chains between consecutive siblings.

    Meta entities are skipped. Sibling sets under a float (at any depth)
    use plain reading order; all other sibling sets use the column-aware
    layout order.
    """
    g = grammar or default_grammar()
    parents = dict(parents or {})
    by_id = {e.id: e for e in entities}

    def under_float(i: str) -> bool:
        seen = set()
        p = parents.get(i)
        while p is not None and p not in seen:
            seen.add(p)
            if g.is_float(by_id[p].category):
                return True
            p = parents.get(p)
        return False

    siblings: dict[Optional[str], list[Entity]] = {}
    for e in entities:
        if g.is_meta(e.category):
            continue
        siblings.setdefault(parents.get(e.id), []).append(e)

    out: list[Relation] = []
    for parent in sorted(siblings, key=lambda p: "" if p is None else "\0" + p):
        members = siblings[parent]
        if len(members) < 2:
            continue
        if members and under_float(members[0].id):
            seq = reading_order(members)
        else:
            seq = layout_order(members, page_width, tau_ovlp, page_left)
        out.extend(
            Relation(a, b, RelationType.FOLLOWED_BY) for a, b in zip(seq, seq[1:])
        )
    return out


def classify_relations(
    entities: Sequence[Entity],
    grammar: Optional[Grammar] = None,
    thresholds: Optional[NestingThresholds] = None,
    page_width: float = 1.0,
    page_height: float = 1.0,
    tau_ovlp: float = 0.7,
    page_left: float = 0.0,
) -> DocStructure:
    """Nest and order a flat entity list. Meta entities stay relation-free."""
    g = grammar or default_grammar()
    _by_id(entities)
    active = [e for e in entities if not g.is_meta(e.category)]
    pairs = nest(active, g, thresholds, use_grammar=True)
    parents = {o: s for s, o in pairs}
    rels = [Relation(s, o, RelationType.PARENT_OF) for s, o in pairs]
    rels += order_entities(
        active, page_width, tau_ovlp, parents=parents, grammar=g, page_left=page_left
    )
    return DocStructure(page_width, page_height, tuple(entities), tuple(rels))
