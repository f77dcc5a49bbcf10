"""Command-line interface: ``docstruct {parse,tables,weaklabel,eval,synth}``."""

from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from docstruct import __version__
from docstruct.evaluation import confidence_filter, evaluate_corpus
from docstruct.geometry import BBox, GeometryError
from docstruct.model import (
    Category,
    DocStructure,
    StructureError,
    dumps_structure,
    read_structure,
    write_text_atomic,
)
from docstruct.refinement import RefinementConfig, refine_detailed
from docstruct.relations import NestingThresholds, classify_relations
from docstruct.synth import FloatSpec, NoiseSpec, PageSpec, write_fixture
from docstruct.tablestruct import TableError, grid_to_dict, match_cells_to_text, parse_table
from docstruct.weaklabels import Page, WeakLabelConfig, WeakLabelError, generate_weak_labels, read_records

log = logging.getLogger("docstruct")

INPUT_ERRORS = (StructureError, WeakLabelError, TableError, GeometryError, OSError, ValueError)


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta1", type=float, default=0.45, help="overlap fraction for nesting (default 0.45)")
    p.add_argument("--theta2", type=float, default=1.2, help="area ratio for nesting (default 1.2)")
    p.add_argument("--tau-ovlp", type=float, default=0.7, help="layout group overlap (default 0.7)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="docstruct", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--print-config", action="store_true", help="print the effective configuration and exit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="detections file(s) to structure file(s)")
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("-o", "--output", type=Path, help="output file, or directory for several inputs")
    p.add_argument("--min-confidence", type=float, default=0.7)
    p.add_argument("--max-iterations", type=int, default=30)
    p.add_argument("--no-refine", action="store_true")
    _add_thresholds(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="report per-stage wall time on stderr")
    p.add_argument("--repeat", type=int, default=1, help="repeat each document for timing (median reported)")

    p = sub.add_parser("tables", help="table detections to a grid report")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path)
    p.add_argument("--text-boxes", type=Path, help='JSON list of {"id", "bbox"} text boxes')
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--centroid-gap", type=float, default=5.0)

    p = sub.add_parser("weaklabel", help="record stream to a noisy structure file")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path)
    p.add_argument("--page-width", type=float, required=True)
    p.add_argument("--page-height", type=float, required=True)
    p.add_argument("--page-number", type=int, default=1)
    p.add_argument("--centroid-gap", type=float, default=5.0)
    p.add_argument("--tau-ovlp", type=float, default=0.7)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("prediction", type=Path, help="structure file or directory")
    p.add_argument("ground_truth", type=Path, help="structure file or directory")
    p.add_argument("--iou", type=float, action="append", help="IoU threshold; repeatable (default 0.5)")
    p.add_argument("--min-confidence", type=float, default=0.7)
    p.add_argument("--eleven-point", action="store_true")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("synth", help="write synthetic fixture directories")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--config", type=Path, help="PageSpec JSON; flags below fill the rest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1, help="pages with consecutive seeds")
    p.add_argument("--columns", type=int, default=1)
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--figure", type=int, action="append", default=[], metavar="GRAPHICS")
    p.add_argument("--table", action="append", default=[], metavar="RxC")
    p.add_argument("--full-width", action="store_true", help="make floats span both columns")
    p.add_argument("--meta", action="store_true")
    p.add_argument("--abstract", action="store_true")
    p.add_argument("--heading", action="store_true")
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--drop-rate", type=float, default=0.0)
    p.add_argument("--relabel-rate", type=float, default=0.0)
    p.add_argument("--duplicate-rate", type=float, default=0.0)
    p.add_argument("--confidence-base", type=float, default=1.0)
    p.add_argument("--confidence-jitter", type=float, default=0.0)
    p.add_argument("--drop-nested-floats", action="store_true")
    p.add_argument("--noise-seed", type=int)
    return parser


def effective_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "print_config"}
    if isinstance(cfg.get("inputs"), list):
        cfg["inputs"] = [str(p) for p in cfg["inputs"]]
    return cfg


# --- parse ------------------------------------------------------------------


def _parse_one(doc: DocStructure, args: argparse.Namespace) -> tuple[DocStructure, dict[str, float]]:
    thresholds = NestingThresholds(args.theta1, args.theta2)
    t0 = time.perf_counter()
    ents = confidence_filter(doc.entities, args.min_confidence)
    t1 = time.perf_counter()
    s = classify_relations(ents, None, thresholds, doc.page_width, doc.page_height, args.tau_ovlp)
    t2 = time.perf_counter()
    times = {"filter_ms": (t1 - t0) * 1e3, "classify_ms": (t2 - t1) * 1e3}
    if not args.no_refine:
        res = refine_detailed(
            ents, None, thresholds, doc.page_width, doc.page_height,
            RefinementConfig(args.max_iterations), args.tau_ovlp,
        )
        s = res.structure
        times["refine_ms"] = (time.perf_counter() - t2) * 1e3
    times["total_ms"] = (time.perf_counter() - t0) * 1e3
    return s, times


def _parse_job(job: tuple[str, Optional[str], argparse.Namespace]) -> tuple[str, dict[str, float]]:
    src, dst, args = job
    doc = read_structure(src)
    runs = []
    s = doc
    for _ in range(max(1, args.repeat)):
        s, times = _parse_one(doc, args)
        runs.append(times)
    text = dumps_structure(s)
    if dst is None:
        sys.stdout.write(text)
    else:
        write_text_atomic(dst, text)
    med = {k: statistics.median(r[k] for r in runs) for k in runs[0]}
    return src, med


def cmd_parse(args: argparse.Namespace) -> int:
    if args.max_iterations < 1:
        raise ValueError("--max-iterations must be at least 1")
    if len(args.inputs) > 1:
        if args.output is None:
            raise ValueError("several inputs need --output DIR")
        args.output.mkdir(parents=True, exist_ok=True)
        jobs = [(str(p), str(args.output / p.name), args) for p in args.inputs]
    else:
        jobs = [(str(args.inputs[0]), str(args.output) if args.output else None, args)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_parse_job, jobs))
    else:
        results = [_parse_job(j) for j in jobs]
    if args.timing:
        for src, med in results:
            parts = " ".join(f"{k}={v:.3f}" for k, v in med.items())
            print(f"timing {src}: {parts} (median of {max(1, args.repeat)})", file=sys.stderr)
    return 0


# --- tables -----------------------------------------------------------------


def _read_text_boxes(path: Path) -> dict[str, BBox]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc.msg}") from exc
    return {str(d["id"]): BBox.from_seq(d["bbox"]) for d in data}


def cmd_tables(args: argparse.Namespace) -> int:
    doc = read_structure(args.input)
    parts = {Category.TABLE_ROW, Category.TABLE_COLUMN, Category.TABLE_CELL}
    tabs = [e for e in doc.entities if e.category is Category.TABULAR]
    groups: dict[Optional[str], list] = {}
    for e in doc.entities:
        if e.category not in parts:
            continue
        cx, cy = e.bbox.centroid
        owner = next(
            (t.id for t in tabs if t.bbox.x0 <= cx <= t.bbox.x1 and t.bbox.y0 <= cy <= t.bbox.y1), None
        )
        groups.setdefault(owner, []).append(e)
    texts = _read_text_boxes(args.text_boxes) if args.text_boxes else None
    tables = []
    for owner in sorted(groups, key=lambda k: "" if k is None else k):
        grid = parse_table(groups[owner], args.centroid_gap)
        matches = match_cells_to_text(grid, texts, args.gamma) if texts is not None else None
        d: dict[str, Any] = {"tabular_id": owner}
        d.update(grid_to_dict(grid, matches))
        tables.append(d)
    _emit(args.output, json.dumps({"tables": tables}, indent=2) + "\n")
    return 0


# --- weaklabel ----------------------------------------------------------------


def cmd_weaklabel(args: argparse.Namespace) -> int:
    records = read_records(args.input)
    cfg = WeakLabelConfig(centroid_gap=args.centroid_gap, tau_ovlp=args.tau_ovlp)
    _, s = generate_weak_labels(records, Page(args.page_width, args.page_height, args.page_number), cfg)
    _emit(args.output, dumps_structure(s, noisy=True))
    return 0


# --- eval -------------------------------------------------------------------


def _pairs(pred: Path, gt: Path) -> list[tuple[DocStructure, DocStructure]]:
    if pred.is_dir() != gt.is_dir():
        raise ValueError("prediction and ground truth must both be files or both directories")
    if not pred.is_dir():
        return [(read_structure(pred), read_structure(gt))]
    names = sorted(p.name for p in gt.glob("*.json"))
    missing = [n for n in names if not (pred / n).exists()]
    if missing:
        raise ValueError(f"predictions missing for {missing}")
    return [(read_structure(pred / n), read_structure(gt / n)) for n in names]


def cmd_eval(args: argparse.Namespace) -> int:
    pairs = _pairs(args.prediction, args.ground_truth)
    reports = [
        evaluate_corpus(pairs, t, args.min_confidence, args.eleven_point) for t in (args.iou or [0.5])
    ]
    if args.format == "json":
        body = [r.to_dict() for r in reports]
        text = json.dumps(body[0] if len(body) == 1 else body, indent=2) + "\n"
    else:
        text = "\n".join(r.to_text() for r in reports)
    _emit(args.output, text)
    return 0


# --- synth ------------------------------------------------------------------


def _table_spec(text: str, full: bool) -> FloatSpec:
    try:
        r, c = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"--table expects RxC, got {text!r}") from None
    return FloatSpec("table", rows=r, cols=c, full_width=full)


def cmd_synth(args: argparse.Namespace) -> int:
    if args.config:
        try:
            base = PageSpec.from_dict(json.loads(args.config.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{args.config}: invalid JSON: {exc.msg}") from exc
    else:
        floats = tuple(FloatSpec("figure", graphics=g, full_width=args.full_width) for g in args.figure)
        floats += tuple(_table_spec(t, args.full_width) for t in args.table)
        base = PageSpec(
            args.seed, args.columns, args.blocks, floats, args.meta, args.abstract, args.heading
        )
    noise = NoiseSpec(
        args.jitter, args.drop_rate, args.relabel_rate, args.confidence_base,
        args.confidence_jitter, args.duplicate_rate, args.drop_nested_floats,
    )
    for k in range(args.count):
        spec = PageSpec(**{**asdict(base), "floats": base.floats, "seed": base.seed + k})
        out = args.output if args.count == 1 else args.output / f"page_{spec.seed:05d}"
        noise_seed = None if args.noise_seed is None else args.noise_seed + k
        write_fixture(out, spec, noise, noise_seed)
        write_text_atomic(out / "spec.json", json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    return 0


def _emit(path: Optional[Path], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        write_text_atomic(path, text)


COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "parse": cmd_parse,
    "tables": cmd_tables,
    "weaklabel": cmd_weaklabel,
    "eval": cmd_eval,
    "synth": cmd_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    if args.print_config:
        print(json.dumps(effective_config(args), indent=2, sort_keys=True))
        return 0
    try:
        return COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        print(f"docstruct {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
