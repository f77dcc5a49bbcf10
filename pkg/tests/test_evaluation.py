import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from docstruct.evaluation import (
    ALL,
    NO_GROUND_TRUTH,
    NOTHING_DETECTED,
    PRF,
    average_precision,
    confidence_filter,
    evaluate,
    evaluate_corpus,
    match_entities,
    mean_ap,
    relation_f1,
)
from docstruct.geometry import BBox
from docstruct.model import Category, DocStructure, Relation, RelationType

from conftest import ent

P, F = RelationType.PARENT_OF, RelationType.FOLLOWED_BY


def test_confidence_filter():
    es = [ent("a", "figure", (0, 0, 1, 1), conf=0.70), ent("b", "figure", (0, 0, 1, 1), conf=0.69),
          ent("c", "figure", (0, 0, 1, 1))]
    assert [e.id for e in confidence_filter(es)] == ["a", "c"]
    assert confidence_filter([]) == []


def test_match_exact():
    gt = [ent(f"g{i}", "figure", (0, 100 * i, 50, 100 * i + 50)) for i in range(3)]
    m = match_entities(gt, gt, Category.FIGURE)
    assert len(m.true_positives) == 3 and m.false_positives == () and m.false_negatives == ()


def test_match_duplicate_prediction():
    gt = [ent("g", "figure", (0, 0, 100, 100))]
    preds = [ent("p1", "figure", (0, 0, 100, 100), conf=0.9), ent("p2", "figure", (0, 0, 100, 98), conf=0.95)]
    m = match_entities(preds, gt, Category.FIGURE)
    assert [t[0] for t in m.true_positives] == ["p2"] and m.false_positives == ("p1",)


def test_match_below_threshold():
    gt = [ent("g", "figure", (0, 0, 100, 100))]
    pred = [ent("p", "figure", (0, 0, 60, 100), conf=0.9)]  # IoU 0.6
    m = match_entities(pred, gt, Category.FIGURE, iou_threshold=0.65)
    assert m.false_positives == ("p",) and m.false_negatives == ("g",)
    assert match_entities(pred, gt, Category.FIGURE, iou_threshold=0.6).true_positives[0][:2] == ("p", "g")


def test_match_ignores_other_categories():
    gt = [ent("g", "figure", (0, 0, 100, 100))]
    pred = [ent("p", "table", (0, 0, 100, 100), conf=0.9)]
    m = match_entities(pred, gt, Category.FIGURE)
    assert m.true_positives == () and m.false_negatives == ("g",)


def test_ap_examples():
    assert average_precision([(0.9, True), (0.8, True)], 2) == 100.0
    assert average_precision([(0.9, False)], 3) == 0.0
    assert average_precision([(0.9, True), (0.8, False)], 2) == pytest.approx(50.0)
    with pytest.raises(ValueError):
        average_precision([], 0)


def test_eleven_point():
    # one TP over 2 GT: precision 1 for recall thresholds 0..0.5 -> 6/11
    assert average_precision([(0.9, True)], 2, eleven_point=True) == pytest.approx(100 * 6 / 11)


def ap_oracle(ranked, n_gt):
    """Sum over hits of (1/n_gt) * best precision at or after that hit."""
    order = sorted(ranked, key=lambda t: -t[0])
    prec, tp = [], 0
    for k, (_, hit) in enumerate(order, 1):
        tp += hit
        prec.append(tp / k)
    total = 0.0
    for k, (_, hit) in enumerate(order):
        if hit:
            total += max(prec[k:]) / n_gt
    return 100 * total


@given(st.lists(st.tuples(st.floats(0, 1), st.booleans()), max_size=20), st.integers(1, 25))
def test_ap_matches_oracle(ranked, extra):
    n_gt = sum(h for _, h in ranked) + extra - 1 or 1
    assert average_precision(ranked, n_gt) == pytest.approx(ap_oracle(ranked, n_gt))


def test_mean_ap():
    assert mean_ap({"a": 100.0}) == 100.0
    assert mean_ap({"a": 100.0, "b": 0.0}) == 50.0
    assert mean_ap({"a": 100.0, "b": None}) == 100.0
    with pytest.raises(ValueError):
        mean_ap({})


def _doc():
    es = (
        ent("fig", "figure", (100, 100, 500, 500)),
        ent("g", "figure_graphic", (120, 120, 480, 400)),
        ent("c", "figure_caption", (120, 420, 480, 480)),
        ent("b", "content_block", (100, 600, 900, 700)),
    )
    rels = (Relation("fig", "g", P), Relation("fig", "c", P), Relation("g", "c", F), Relation("fig", "b", F))
    return DocStructure(1000, 1000, es, rels)


def test_relation_f1_identity():
    s = _doc()
    scores = relation_f1(s, s)
    assert all(v.f1 == 1.0 for v in scores.values())
    assert set(scores) == {"parent_of", "followed_by", ALL}


def test_relation_flip():
    s = _doc()
    flipped = DocStructure(s.page_width, s.page_height, s.entities,
                           tuple(r for r in s.relations if r != Relation("g", "c", F)) + (Relation("c", "g", F),))
    sc = relation_f1(flipped, s)["followed_by"]
    assert (sc.tp, sc.fp, sc.fn) == (1, 1, 1)


def test_relation_f1_no_matches():
    s = _doc()
    tiny = DocStructure(1000, 1000, tuple(e.with_bbox(BBox(e.bbox.x0, e.bbox.y0, e.bbox.x0 + 1, e.bbox.y0 + 1))
                                          for e in s.entities), s.relations)
    assert relation_f1(tiny, s)[ALL].f1 == 0.0
    r = evaluate(tiny, s)
    assert r.mean_ap == 0.0


def test_relation_f1_relabel_symmetry():
    s = _doc()
    ren = {e.id: f"x_{e.id}" for e in s.entities}
    t = DocStructure(1000, 1000, tuple(type(e)(ren[e.id], e.category, e.bbox) for e in s.entities),
                     tuple(Relation(ren[r.subject], ren[r.object], r.rel_type) for r in s.relations))
    assert relation_f1(t, s) == relation_f1(s, s)


def test_prf_empty():
    assert PRF.from_counts(0, 0, 0).f1 == 1.0
    assert PRF.from_counts(0, 1, 0).precision == 0.0


def test_report_statuses_and_output():
    gt = _doc()
    pred = DocStructure(1000, 1000, (gt.entity("fig"), gt.entity("g"), ent("t", "table", (0, 0, 10, 10), conf=0.9),))
    r = evaluate(pred, gt)
    assert r.per_category[Category.TABLE].status == NO_GROUND_TRUTH
    assert r.per_category[Category.FIGURE_CAPTION].status == NOTHING_DETECTED
    assert r.per_category[Category.FIGURE_CAPTION].ap == 0.0
    # table excluded from the mean, missing caption and block counted as 0
    assert r.mean_ap == pytest.approx(50.0)
    d = r.to_dict()
    json.dumps(d)
    assert d["categories"]["table"]["ap"] is None
    txt = r.to_text()
    assert "mAP 50.00" in txt and "no ground truth" in txt


def test_self_evaluation_all_thresholds():
    s = _doc()
    for t in (0.5, 0.65, 0.8, 1.0):
        r = evaluate(s, s, iou_threshold=t)
        assert r.mean_ap == 100.0 and r.relation_scores[ALL].f1 == 1.0


def test_min_confidence_applied():
    gt = _doc()
    pred = DocStructure(1000, 1000, tuple(e for e in gt.entities) + (ent("x", "figure", (0, 800, 50, 850), conf=0.5),),
                        gt.relations)
    assert evaluate(pred, gt, min_confidence=0.7).per_category[Category.FIGURE].n_pred == 1
    assert evaluate(pred, gt).per_category[Category.FIGURE].n_pred == 2


def test_corpus_pooling():
    s = _doc()
    r = evaluate_corpus([(s, s), (s, s)])
    assert r.documents == 2 and r.per_category[Category.FIGURE].n_gt == 2
