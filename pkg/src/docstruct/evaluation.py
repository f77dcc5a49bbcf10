"""Detection and relation metrics.

Entities are scored with per-category average precision under IoU matching
and the mean over categories; relations are scored as exact
(subject, object, type) triples after mapping predicted ids through the
entity matching.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

from docstruct import kernels
from docstruct.model import Category, DocStructure, Entity, RelationType

ALL = "all"
# Scored relation types; null relations are implicit and never stored.
SCORED_TYPES = (RelationType.PARENT_OF, RelationType.FOLLOWED_BY)


@dataclass(frozen=True)
class MatchResult:
    true_positives: tuple[tuple[str, str, float], ...]
    false_positives: tuple[str, ...]
    false_negatives: tuple[str, ...]
    # (confidence, is true positive) in ranking order; feeds average_precision
    ranked: tuple[tuple[float, bool], ...] = ()

    @property
    def mapping(self) -> dict[str, str]:
        return {p: g for p, g, _ in self.true_positives}


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> PRF:
        n_pred, n_gt = tp + fp, tp + fn
        if n_pred == 0 and n_gt == 0:
            return cls(1.0, 1.0, 1.0, 0, 0, 0)
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_gt if n_gt else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, tp, fp, fn)


NO_GROUND_TRUTH = "no ground truth"
NOTHING_DETECTED = "nothing detected"
SCORED = "scored"


@dataclass(frozen=True)
class CategoryScore:
    status: str
    n_gt: int
    n_pred: int
    ap: Optional[float]


@dataclass(frozen=True)
class EvalReport:
    iou_threshold: float
    per_category: Mapping[Category, CategoryScore]
    mean_ap: Optional[float]
    relation_scores: Mapping[str, PRF]
    eleven_point: bool = False
    documents: int = 1

    @property
    def per_category_ap(self) -> dict[Category, float]:
        return {c: s.ap for c, s in self.per_category.items() if s.ap is not None}

    def to_dict(self) -> dict[str, Any]:
        return {
            "iou_threshold": self.iou_threshold,
            "interpolation": "11-point" if self.eleven_point else "all-point",
            "documents": self.documents,
            "mean_ap": self.mean_ap,
            "categories": {
                c.value: {"status": s.status, "gt": s.n_gt, "pred": s.n_pred, "ap": s.ap}
                for c, s in self.per_category.items()
            },
            "relations": {
                k: {
                    "precision": v.precision,
                    "recall": v.recall,
                    "f1": v.f1,
                    "tp": v.tp,
                    "fp": v.fp,
                    "fn": v.fn,
                }
                for k, v in self.relation_scores.items()
            },
        }

    def to_text(self) -> str:
        rows = [("category", "gt", "pred", "AP")]
        for c, s in self.per_category.items():
            ap = f"{s.ap:.2f}" if s.ap is not None else "-"
            note = "" if s.status == SCORED else f"  ({s.status})"
            rows.append((c.value, str(s.n_gt), str(s.n_pred), ap + note))
        widths = [max(len(r[k]) for r in rows) for k in range(3)]
        lines = [f"IoU threshold {self.iou_threshold:g}"]
        for r in rows:
            lines.append("  ".join(r[k].ljust(widths[k]) for k in range(3)) + "  " + r[3])
        m = f"{self.mean_ap:.2f}" if self.mean_ap is not None else "-"
        lines.append(f"mAP {m}")
        lines.append("")
        rel_rows = [("relation", "P", "R", "F1")] + [
            (k, f"{v.precision:.3f}", f"{v.recall:.3f}", f"{v.f1:.3f}") for k, v in self.relation_scores.items()
        ]
        rw = [max(len(r[k]) for r in rel_rows) for k in range(4)]
        for r in rel_rows:
            lines.append("  ".join(r[k].ljust(rw[k]) for k in range(4)).rstrip())
        return "\n".join(lines) + "\n"


def confidence_filter(predictions: Iterable[Entity], min_conf: float = 0.7) -> list[Entity]:
    """Keep predictions with confidence ``>= min_conf``.

    Entities without a confidence (ground truth, weak labels) are kept.
    """
    return [p for p in predictions if p.confidence is None or p.confidence >= min_conf]


def _conf(e: Entity) -> float:
    return 1.0 if e.confidence is None else e.confidence


def match_entities(
    predictions: Sequence[Entity],
    ground_truth: Sequence[Entity],
    category: Optional[Category] = None,
    iou_threshold: float = 0.5,
) -> MatchResult:
    """Greedy matching in descending confidence order.

    Each prediction looks at the ground-truth box it overlaps most. It is a
    true positive when that IoU reaches the threshold and the box is still
    free; otherwise it is a false positive, so a second prediction on a
    claimed box never steals a weaker match elsewhere.
    """
    if category is not None:
        predictions = [p for p in predictions if p.category is category]
        ground_truth = [g for g in ground_truth if g.category is category]
    preds = sorted(predictions, key=lambda p: (-_conf(p), p.id))
    gts = sorted(ground_truth, key=lambda g: g.id)
    ious = kernels.iou_matrix([p.bbox for p in preds], [g.bbox for g in gts]) if preds and gts else []
    claimed = [False] * len(gts)
    tps: list[tuple[str, str, float]] = []
    fps: list[str] = []
    ranked: list[tuple[float, bool]] = []
    for k, p in enumerate(preds):
        best, best_iou = -1, 0.0
        for j in range(len(gts)):
            v = ious[k][j]
            if v > best_iou:
                best, best_iou = j, v
        if best >= 0 and best_iou >= iou_threshold and not claimed[best]:
            claimed[best] = True
            tps.append((p.id, gts[best].id, best_iou))
            ranked.append((_conf(p), True))
        else:
            fps.append(p.id)
            ranked.append((_conf(p), False))
    fns = tuple(g.id for j, g in enumerate(gts) if not claimed[j])
    return MatchResult(tuple(tps), tuple(fps), fns, tuple(ranked))


def average_precision(
    ranked: Sequence[tuple[float, bool]], n_gt: int, eleven_point: bool = False
) -> float:
    """Area under the precision-recall curve, scaled to [0, 100].

    ``ranked`` lists (confidence, is true positive) pairs; it is re-sorted by
    descending confidence with a stable sort. The precision envelope is made
    monotone non-increasing before integration over all recall points, or
    sampled at recall 0, 0.1, ..., 1 when ``eleven_point`` is set.
    """
    if n_gt <= 0:
        raise ValueError("average precision needs at least one ground-truth instance")
    order = sorted(ranked, key=lambda t: -t[0])
    tp = 0
    rec: list[float] = []
    prec: list[float] = []
    for k, (_, hit) in enumerate(order, 1):
        tp += hit
        rec.append(tp / n_gt)
        prec.append(tp / k)
    if eleven_point:
        total = 0.0
        for t in range(11):
            r = t / 10.0
            total += max((p for p, rr in zip(prec, rec) if rr >= r), default=0.0)
        return 100.0 * total / 11.0
    mrec = [0.0] + rec + [1.0]
    mpre = [0.0] + prec + [0.0]
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    area = 0.0
    for i in range(1, len(mrec)):
        if mrec[i] != mrec[i - 1]:
            area += (mrec[i] - mrec[i - 1]) * mpre[i]
    return 100.0 * area


def mean_ap(per_category_ap: Mapping[Any, Optional[float]]) -> float:
    """Unweighted mean over categories that have an AP value."""
    vals = [v for v in per_category_ap.values() if v is not None]
    if not vals:
        raise ValueError("no category with ground truth")
    return sum(vals) / len(vals)


def match_structures(
    pred: Sequence[Entity], gt: Sequence[Entity], iou_threshold: float
) -> dict[Category, MatchResult]:
    cats = sorted({e.category for e in pred} | {e.category for e in gt}, key=list(Category).index)
    return {c: match_entities(pred, gt, c, iou_threshold) for c in cats}


def _relation_counts(
    pred: DocStructure, gt: DocStructure, mapping: Mapping[str, str]
) -> dict[RelationType, tuple[int, int, int]]:
    out = {}
    for t in SCORED_TYPES:
        gt_set = {(r.subject, r.object) for r in gt.of_type(t)}
        pred_rels = pred.of_type(t)
        mapped = {
            (mapping[r.subject], mapping[r.object])
            for r in pred_rels
            if r.subject in mapping and r.object in mapping
        }
        tp = len(mapped & gt_set)
        out[t] = (tp, len(pred_rels) - tp, len(gt_set) - tp)
    return out


def _prf_table(counts: Mapping[RelationType, tuple[int, int, int]]) -> dict[str, PRF]:
    scores = {t.value: PRF.from_counts(*c) for t, c in counts.items()}
    scores[ALL] = PRF.from_counts(*(sum(c[k] for c in counts.values()) for k in range(3)))
    return scores


def relation_f1(pred: DocStructure, gt: DocStructure, iou_threshold: float = 0.5) -> dict[str, PRF]:
    """Exact-triple precision, recall and F1 per relation type and overall."""
    mapping: dict[str, str] = {}
    for m in match_structures(pred.entities, gt.entities, iou_threshold).values():
        mapping.update(m.mapping)
    return _prf_table(_relation_counts(pred, gt, mapping))


def _filter_structure(s: DocStructure, min_conf: Optional[float]) -> DocStructure:
    if min_conf is None:
        return s
    kept = confidence_filter(s.entities, min_conf)
    if len(kept) == len(s.entities):
        return s
    ids = {e.id for e in kept}
    rels = tuple(r for r in s.relations if r.subject in ids and r.object in ids)
    return DocStructure(s.page_width, s.page_height, tuple(kept), rels)


@dataclass
class _Pool:
    ranked: dict[Category, list[tuple[float, bool]]] = field(default_factory=dict)
    n_gt: dict[Category, int] = field(default_factory=dict)
    n_pred: dict[Category, int] = field(default_factory=dict)
    rel: dict[RelationType, list[int]] = field(default_factory=lambda: {t: [0, 0, 0] for t in SCORED_TYPES})


def evaluate_corpus(
    pairs: Iterable[tuple[DocStructure, DocStructure]],
    iou_threshold: float = 0.5,
    min_confidence: Optional[float] = None,
    eleven_point: bool = False,
) -> EvalReport:
    """Pool (prediction, ground truth) pairs into one report.

    Matching happens per document; ranked matches and relation counts are
    pooled over the corpus before AP and F1 are computed.
    """
    pool = _Pool()
    docs = 0
    for pred, gt in pairs:
        docs += 1
        pred = _filter_structure(pred, min_confidence)
        matches = match_structures(pred.entities, gt.entities, iou_threshold)
        mapping: dict[str, str] = {}
        for c, m in matches.items():
            mapping.update(m.mapping)
            pool.ranked.setdefault(c, []).extend(m.ranked)
            pool.n_gt[c] = pool.n_gt.get(c, 0) + len(m.true_positives) + len(m.false_negatives)
            pool.n_pred[c] = pool.n_pred.get(c, 0) + len(m.ranked)
        for t, (tp, fp, fn) in _relation_counts(pred, gt, mapping).items():
            acc = pool.rel[t]
            acc[0] += tp
            acc[1] += fp
            acc[2] += fn
    per_cat: dict[Category, CategoryScore] = {}
    for c in sorted(pool.ranked, key=list(Category).index):
        n_gt, n_pred = pool.n_gt[c], pool.n_pred[c]
        if n_gt == 0:
            per_cat[c] = CategoryScore(NO_GROUND_TRUTH, 0, n_pred, None)
            continue
        # Stable sort keeps per-document ranking for equal confidences.
        ap = average_precision(pool.ranked[c], n_gt, eleven_point)
        status = NOTHING_DETECTED if n_pred == 0 else SCORED
        per_cat[c] = CategoryScore(status, n_gt, n_pred, ap)
    aps = {c: s.ap for c, s in per_cat.items()}
    m = mean_ap(aps) if any(v is not None for v in aps.values()) else None
    rel = _prf_table({t: tuple(v) for t, v in pool.rel.items()})  # type: ignore[misc]
    return EvalReport(iou_threshold, per_cat, m, rel, eleven_point, docs)


def evaluate(
    pred: DocStructure,
    gt: DocStructure,
    iou_threshold: float = 0.5,
    min_confidence: Optional[float] = None,
    eleven_point: bool = False,
) -> EvalReport:
    return evaluate_corpus([(pred, gt)], iou_threshold, min_confidence, eleven_point)
