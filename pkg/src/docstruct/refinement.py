"""Structure-based refinement: repair detections using the classified
relations, re-classify, and repeat until nothing changes."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from docstruct.geometry import intersection, union_bbox
from docstruct.grammar import CHILD_ONLY_CATEGORIES, Grammar, default_grammar
from docstruct.model import Category, DocStructure, Entity, Relation, RelationType
from docstruct.relations import NestingThresholds, classify_relations, nest

log = logging.getLogger(__name__)

# Table internals are handled by the table-structure heuristics.
_TABLE_PARTS = frozenset({Category.TABLE_ROW, Category.TABLE_COLUMN, Category.TABLE_CELL})


@dataclass(frozen=True)
class RefinementConfig:
    max_iterations: int = 30

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class RefinementResult:
    structure: DocStructure
    iterations: int
    converged: bool
    steps: tuple[str, ...]


def _replace(s: DocStructure, entities: Sequence[Entity], relations: Sequence[Relation]) -> DocStructure:
    ids = {e.id for e in entities}
    rels = tuple(r for r in relations if r.subject in ids and r.object in ids)
    return DocStructure(s.page_width, s.page_height, tuple(entities), rels)


def _depths(parents: dict[str, str]) -> dict[str, int]:
    depth: dict[str, int] = {}

    def walk(i: str) -> int:
        if i in depth:
            return depth[i]
        chain = []
        cur: Optional[str] = i
        while cur is not None and cur not in depth and cur not in chain:
            chain.append(cur)
            cur = parents.get(cur)
        base = depth.get(cur, -1) if cur is not None else -1
        for k, node in enumerate(reversed(chain)):
            depth[node] = base + 1 + k
        return depth[i]

    for i in parents:
        walk(i)
    return depth


def expand_parents(s: DocStructure) -> tuple[DocStructure, bool]:
    """Grow each parent to enclose its direct children, deepest first."""
    parents = s.parent_map()
    if not parents:
        return s, False
    kids: dict[str, list[str]] = {}
    for c, p in parents.items():
        kids.setdefault(p, []).append(c)
    depth = _depths(parents)
    boxes = {e.id: e.bbox for e in s.entities}
    changed = False
    for p in sorted(kids, key=lambda i: (-depth.get(i, 0), i)):
        grown = union_bbox([boxes[p]] + [boxes[c] for c in kids[p]])
        if grown != boxes[p]:
            boxes[p] = grown
            changed = True
    if not changed:
        return s, False
    ents = [e.with_bbox(boxes[e.id]) if boxes[e.id] != e.bbox else e for e in s.entities]
    return _replace(s, ents, s.relations), True


def merge_same_category_singletons(
    s: DocStructure,
    grammar: Optional[Grammar] = None,
    thresholds: Optional[NestingThresholds] = None,
) -> tuple[DocStructure, bool]:
    """Fold duplicate nestings into their parent.

    Works on the purely geometric nesting (no grammar filter), since the
    classified relations never contain grammar-illegal pairs. A parent with
    exactly one child of its own category absorbs that child; so does a
    parent whose only child forms a grammar-illegal pair. The parent keeps
    its id and takes the union box.
    """
    g = grammar or default_grammar()
    active = [
        e for e in s.entities if not g.is_meta(e.category) and e.category not in _TABLE_PARTS
    ]
    pairs = nest(active, g, thresholds, use_grammar=False)
    by_id = {e.id: e for e in s.entities}
    kids: dict[str, list[str]] = {}
    for p, c in pairs:
        kids.setdefault(p, []).append(c)
    depth = _depths({c: p for p, c in pairs})

    merges: list[tuple[str, str]] = []
    busy: set[str] = set()
    for p in sorted(kids, key=lambda i: (depth.get(i, 0), i)):
        pc = by_id[p].category
        same = [c for c in kids[p] if by_id[c].category == pc]
        target = None
        if len(same) == 1:
            target = same[0]
        elif len(kids[p]) == 1 and not g.allowed_child(pc, by_id[kids[p][0]].category):
            target = kids[p][0]
        if target is None or p in busy or target in busy:
            continue
        merges.append((p, target))
        busy.update((p, target))
    if not merges:
        return s, False
    boxes = {e.id: e.bbox for e in s.entities}
    dropped = set()
    for p, c in merges:
        boxes[p] = union_bbox([boxes[p], boxes[c]])
        dropped.add(c)
    ents = [e.with_bbox(boxes[e.id]) for e in s.entities if e.id not in dropped]
    return _replace(s, ents, s.relations), True


def _fresh_id(base: str, taken: set[str]) -> str:
    cand = f"{base}.wrap"
    k = 1
    while cand in taken:
        k += 1
        cand = f"{base}.wrap{k}"
    taken.add(cand)
    return cand


def wrap_conflicting_siblings(
    s: DocStructure, grammar: Optional[Grammar] = None
) -> tuple[DocStructure, bool]:
    """Resolve child-count breaches by wrapping each child of the breaching
    category in a new entity of the parent's category (a figure with two
    graphics becomes a figure holding two sub-figures)."""
    g = grammar or default_grammar()
    by_id = {e.id: e for e in s.entities}
    kids: dict[str, list[str]] = {}
    for r in s.of_type(RelationType.PARENT_OF):
        kids.setdefault(r.subject, []).append(r.object)
    taken = set(by_id)
    new_entities: list[Entity] = []
    rels = set(s.relations)
    for p in sorted(kids):
        pc = by_id[p].category
        if not g.allowed_child(pc, pc):
            continue
        counts: dict[Category, list[str]] = {}
        for c in kids[p]:
            counts.setdefault(by_id[c].category, []).append(c)
        for cc, members in sorted(counts.items()):
            limit = g.max_count(pc, cc)
            if limit is None or len(members) <= limit or not g.allowed_child(pc, cc):
                continue
            for c in sorted(members):
                child = by_id[c]
                w = Entity(_fresh_id(c, taken), pc, child.bbox, child.confidence)
                new_entities.append(w)
                rels.discard(Relation(p, c, RelationType.PARENT_OF))
                rels.add(Relation(p, w.id, RelationType.PARENT_OF))
                rels.add(Relation(w.id, c, RelationType.PARENT_OF))
    if not new_entities:
        return s, False
    rels = {r for r in rels if r.rel_type is not RelationType.FOLLOWED_BY}
    return _replace(s, list(s.entities) + new_entities, list(rels)), True


def adopt_orphans(s: DocStructure, grammar: Optional[Grammar] = None) -> tuple[DocStructure, bool]:
    """Attach parentless child-only entities to an ordering neighbour.

    Candidates are the entities directly before or after the orphan in the
    reading order. Those the grammar rejects and those not touching the
    orphan are dropped; a single survivor grows to enclose the orphan.
    """
    g = grammar or default_grammar()
    parents = s.parent_map()
    by_id = {e.id: e for e in s.entities}
    neighbours: dict[str, set[str]] = {}
    for r in s.of_type(RelationType.FOLLOWED_BY):
        neighbours.setdefault(r.subject, set()).add(r.object)
        neighbours.setdefault(r.object, set()).add(r.subject)
    boxes = {e.id: e.bbox for e in s.entities}
    changed = False
    for e in s.entities:
        if e.id in parents or e.category not in CHILD_ONLY_CATEGORIES or g.is_meta(e.category):
            continue
        cands = [
            c
            for c in sorted(neighbours.get(e.id, ()))
            if g.allowed_child(by_id[c].category, e.category)
            and intersection(by_id[c].bbox, e.bbox) is not None
        ]
        if len(cands) != 1:
            continue
        grown = union_bbox([boxes[cands[0]], e.bbox])
        if grown != boxes[cands[0]]:
            boxes[cands[0]] = grown
            changed = True
    if not changed:
        return s, False
    ents = [x.with_bbox(boxes[x.id]) for x in s.entities]
    return _replace(s, ents, s.relations), True


def _state_key(entities: Sequence[Entity]) -> tuple:
    return tuple(sorted((e.id, e.category.value, e.bbox.as_list().__repr__()) for e in entities))


def refine_detailed(
    entities: Sequence[Entity],
    grammar: Optional[Grammar] = None,
    thresholds: Optional[NestingThresholds] = None,
    page_width: float = 1.0,
    page_height: float = 1.0,
    config: Optional[RefinementConfig] = None,
    tau_ovlp: float = 0.7,
) -> RefinementResult:
    """Run the refinement loop and report how it ended.

    Each iteration classifies relations and applies the four repair steps in
    order, restarting after the first one that changes something. The loop
    stops when a full pass changes nothing, when the iteration budget is
    spent, or when an entity state repeats.
    """
    g = grammar or default_grammar()
    cfg = config or RefinementConfig()

    def classify(ents: Sequence[Entity]) -> DocStructure:
        return classify_relations(ents, g, thresholds, page_width, page_height, tau_ovlp)

    step_fns: list[tuple[str, Callable[[DocStructure], tuple[DocStructure, bool]]]] = [
        ("expand_parents", expand_parents),
        ("merge_singletons", lambda s: merge_same_category_singletons(s, g, thresholds)),
        ("wrap_siblings", lambda s: wrap_conflicting_siblings(s, g)),
        ("adopt_orphans", lambda s: adopt_orphans(s, g)),
    ]
    ents = list(entities)
    applied: list[str] = []
    seen: set[tuple] = set()
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        key = _state_key(ents)
        if key in seen:
            log.warning("refinement revisited an earlier state; stopping")
            break
        seen.add(key)
        s = classify(ents)
        for name, fn in step_fns:
            s2, changed = fn(s)
            if changed:
                ents = list(s2.entities)
                applied.append(name)
                break
        else:
            converged = True
            break
    else:
        log.warning("refinement hit the iteration limit of %d", cfg.max_iterations)
    return RefinementResult(classify(ents), iterations, converged, tuple(applied))


def refine(
    entities: Sequence[Entity],
    grammar: Optional[Grammar] = None,
    thresholds: Optional[NestingThresholds] = None,
    page_width: float = 1.0,
    page_height: float = 1.0,
    config: Optional[RefinementConfig] = None,
    tau_ovlp: float = 0.7,
) -> DocStructure:
    return refine_detailed(
        entities, grammar, thresholds, page_width, page_height, config, tau_ovlp
    ).structure
