"""Hierarchical document structure parsing from flat entity detections."""

from docstruct.evaluation import EvalReport, evaluate, evaluate_corpus
from docstruct.geometry import BBox
from docstruct.grammar import Grammar, check_conformance, default_grammar
from docstruct.model import (
    Category,
    DocStructure,
    Entity,
    Relation,
    RelationType,
    read_structure,
    validate_structure,
    write_structure,
)
from docstruct.refinement import RefinementConfig, refine
from docstruct.relations import NestingThresholds, classify_relations
from docstruct.tablestruct import TableGrid, parse_table
from docstruct.weaklabels import Page, RenderRecord, generate_weak_labels

__all__ = [
    "BBox",
    "Category",
    "DocStructure",
    "Entity",
    "EvalReport",
    "Grammar",
    "NestingThresholds",
    "Page",
    "Relation",
    "RelationType",
    "RefinementConfig",
    "RenderRecord",
    "TableGrid",
    "check_conformance",
    "classify_relations",
    "default_grammar",
    "evaluate",
    "evaluate_corpus",
    "generate_weak_labels",
    "parse_table",
    "read_structure",
    "refine",
    "validate_structure",
    "write_structure",
]

__version__ = "0.1.0"
