"""Document grammar: allowed nestings, float and meta flags, child limits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

from docstruct.model import Category, DocStructure, RelationType, StructureError, Violation

META_CATEGORIES = frozenset(
    {Category.HEADER, Category.FOOTER, Category.PAGE_NUMBER, Category.DATE, Category.KEYWORDS}
)

# Categories expected to appear only nested under a parent; orphans of these
# are candidates for adoption during refinement.
CHILD_ONLY_CATEGORIES = frozenset(
    {
        Category.FIGURE_GRAPHIC,
        Category.FIGURE_CAPTION,
        Category.TABLE_CAPTION,
        Category.TABULAR,
        Category.ITEM,
        Category.TABLE_CELL,
        Category.TABLE_ROW,
        Category.TABLE_COLUMN,
        Category.EQUATION_FORMULA,
        Category.EQUATION_LABEL,
        Category.BIBLIOGRAPHY_BLOCK,
    }
)


@dataclass(frozen=True)
class GrammarRule:
    parent: Category
    allowed_children: frozenset[Category] = frozenset()
    inferred_children: frozenset[Category] = frozenset()
    is_float: bool = False
    is_meta: bool = False
    max_counts: Mapping[Category, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.is_meta and (self.allowed_children or self.inferred_children):
            raise StructureError(f"meta category {self.parent} cannot have children")


class Grammar:
    def __init__(self, rules: list[GrammarRule]):
        self.rules: dict[Category, GrammarRule] = {}
        for rule in rules:
            if rule.parent in self.rules:
                raise StructureError(f"duplicate grammar rule for {rule.parent}")
            self.rules[rule.parent] = rule
        self._allowed = {
            c: rule.allowed_children | rule.inferred_children for c, rule in self.rules.items()
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Grammar:
        try:
            return cls._from_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, StructureError):
                raise
            raise StructureError(f"malformed grammar config: {exc!r}") from exc

    @classmethod
    def _from_dict(cls, data: Mapping[str, Any]) -> Grammar:
        rules = []
        for raw in data["rules"]:
            parent = Category(raw["parent"])
            is_meta = bool(raw.get("meta", False))

            def cats(names: list[str]) -> frozenset[Category]:
                if "*" in names:
                    return frozenset(c for c in Category if c not in META_CATEGORIES)
                return frozenset(Category(n) for n in names)

            rules.append(
                GrammarRule(
                    parent=parent,
                    allowed_children=cats(raw.get("children", [])),
                    inferred_children=cats(raw.get("inferred_children", [])),
                    is_float=bool(raw.get("float", False)),
                    is_meta=is_meta,
                    max_counts={Category(k): int(v) for k, v in raw.get("max_counts", {}).items()},
                )
            )
        return cls(rules)

    @classmethod
    def load(cls, path: str | Path) -> Grammar:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def allowed_child(self, parent: Category, child: Category) -> bool:
        allowed = self._allowed.get(parent)
        return allowed is not None and child in allowed

    def is_meta(self, c: Category) -> bool:
        rule = self.rules.get(c)
        return rule is not None and rule.is_meta

    def is_float(self, c: Category) -> bool:
        rule = self.rules.get(c)
        return rule is not None and rule.is_float

    def max_count(self, parent: Category, child: Category) -> Optional[int]:
        rule = self.rules.get(parent)
        if rule is None:
            return None
        return rule.max_counts.get(child)

    @property
    def meta_categories(self) -> frozenset[Category]:
        return frozenset(c for c, r in self.rules.items() if r.is_meta)


@lru_cache(maxsize=1)
def default_grammar() -> Grammar:
    text = resources.files("docstruct").joinpath("data/grammar.json").read_text(encoding="utf-8")
    return Grammar.from_dict(json.loads(text))


def allowed_child(parent: Category, child: Category, grammar: Optional[Grammar] = None) -> bool:
    return (grammar or default_grammar()).allowed_child(parent, child)


def is_meta(c: Category, grammar: Optional[Grammar] = None) -> bool:
    return (grammar or default_grammar()).is_meta(c)


def check_conformance(s: DocStructure, grammar: Optional[Grammar] = None) -> list[Violation]:
    """One violation per disallowed parent_of edge and per child-count breach."""
    g = grammar or default_grammar()
    out: list[Violation] = []
    counts: dict[tuple[str, Category], int] = {}
    for r in s.of_type(RelationType.PARENT_OF):
        parent = s.entity(r.subject)
        child = s.entity(r.object)
        if not g.allowed_child(parent.category, child.category):
            out.append(
                Violation(r.subject, "disallowed child", f"{parent.category} parent_of {child.category} ({r.object})")
            )
        key = (r.subject, child.category)
        counts[key] = counts.get(key, 0) + 1
    for (pid, ccat), n in sorted(counts.items()):
        limit = g.max_count(s.entity(pid).category, ccat)
        if limit is not None and n > limit:
            out.append(Violation(pid, "max count", f"{n} {ccat} children, at most {limit}"))
    return sorted(out)
