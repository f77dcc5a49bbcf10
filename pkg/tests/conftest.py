import pytest

from docstruct.geometry import BBox
from docstruct.model import Category, Entity

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def ent(eid, cat, box, conf=None, cell_range=None):
    if not isinstance(box, BBox):
        box = BBox(*box)
    return Entity(eid, Category(cat), box, conf, cell_range)


@pytest.fixture
def make_entity():
    return ent


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def tree_signature(s, skip_meta=True):
    """Order-free (category, bbox, children) signature of a structure's forest."""
    from docstruct.grammar import default_grammar

    g = default_grammar()
    kids: dict = {}
    for c, p in s.parent_map().items():
        kids.setdefault(p, []).append(c)

    def sig(i):
        e = s.entity(i)
        return (e.category.value, tuple(round(v, 6) for v in e.bbox.as_list()),
                tuple(sorted(sig(c) for c in kids.get(i, ()))))

    return tuple(sorted(sig(r) for r in s.roots() if not (skip_meta and g.is_meta(s.entity(r).category))))
