"""Command line entry point: ``addrx extract | eval | gen``.

Exit codes: 0 success, 1 usage error, 2 input/schema error, 3 gazetteer
load error, 4 unknown document ids in evaluation, 5 unwritable output.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .evaluate import EvaluationError, TruthSchemaError, evaluate_corpus, load_json_files
from .gazetteer import GazetteerError, default_gazetteer_dir, load_gazetteer
from .ingest import IngestError, read_document
from .pipeline import (
    GEOCODE_BACKENDS,
    ConfigError,
    PipelineConfig,
    dump_extraction,
    extract_corpus,
    load_config,
    output_path,
)
from .synthgen import NoiseModel, generate_corpus

log = logging.getLogger("addrx")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_GAZETTEER = 3
EXIT_UNKNOWN_DOC = 4
EXIT_UNWRITABLE = 5

GAZETTEER_ENV = "ADDRX_GAZETTEER_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="addrx", description="Postal address extraction from OCR output of German letters.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    ex = sub.add_parser("extract", help="extract labelled addresses from OCR-lines files")
    ex.add_argument("--input", action="append", required=True, metavar="GLOB", help="OCR-lines file glob (repeatable)")
    ex.add_argument("--gazetteer", metavar="DIR", help=f"reference data directory (fallback: ${GAZETTEER_ENV})")
    ex.add_argument("--config", metavar="FILE", help="JSON config merged over the defaults")
    ex.add_argument("--output", required=True, metavar="DIR")
    ex.add_argument("--fuzzy-max-edits", type=int, metavar="N")
    ex.add_argument("--geocode", choices=GEOCODE_BACKENDS)
    ex.add_argument("--geocode-url", metavar="URL")
    ex.add_argument("--timeout-ms", type=int, metavar="T")
    ex.add_argument("--parallelism", type=int, metavar="N")

    ev = sub.add_parser("eval", help="score predictions against ground truth")
    ev.add_argument("--pred", action="append", default=[], metavar="GLOB")
    ev.add_argument("--truth", action="append", required=True, metavar="GLOB")
    ev.add_argument("--report", required=True, metavar="FILE")

    gen = sub.add_parser("gen", help="generate a synthetic letter corpus")
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise-p", type=float, default=0.0)
    gen.add_argument("--line-drop", type=float, default=0.0)
    gen.add_argument("--out", required=True, metavar="DIR")
    gen.add_argument("--gazetteer", metavar="DIR", help="reference data (default: bundled fixtures)")
    return parser


def _expand(patterns: Sequence[str]) -> list[str]:
    found: set[str] = set()
    for pattern in patterns:
        matches = glob.glob(pattern)
        if not matches and os.path.isfile(pattern):
            matches = [pattern]
        found.update(matches)
    return sorted(found)


def _pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    updates = {}
    if args.gazetteer:
        updates["gazetteer_dir"] = args.gazetteer
    elif not cfg.gazetteer_dir and os.environ.get(GAZETTEER_ENV):
        updates["gazetteer_dir"] = os.environ[GAZETTEER_ENV]
    if args.fuzzy_max_edits is not None:
        updates["max_edits"] = args.fuzzy_max_edits
    if args.parallelism is not None:
        updates["parallelism"] = args.parallelism
    geo = {}
    if args.geocode:
        geo["backend"] = args.geocode
    if args.geocode_url:
        geo["url"] = args.geocode_url
    if args.timeout_ms is not None:
        geo["timeout_ms"] = args.timeout_ms
    try:
        if geo:
            updates["geocode"] = replace(cfg.geocode, **geo)
        return replace(cfg, **updates)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def run_extract(args) -> int:
    try:
        cfg = _pipeline_config(args)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if not cfg.gazetteer_dir:
        raise UsageError(f"no gazetteer given: pass --gazetteer, set gazetteer_dir in the config or ${GAZETTEER_ENV}")
    inputs = _expand(args.input)
    if not inputs:
        raise UsageError(f"no input files match {args.input}")

    try:
        g = load_gazetteer(cfg.gazetteer_dir)
    except GazetteerError as exc:
        log.error("gazetteer load failed: %s", exc)
        return EXIT_GAZETTEER

    docs = []
    seen: dict[str, str] = {}
    for path in inputs:
        try:
            doc = read_document(path)
        except (IngestError, OSError) as exc:
            log.error("%s: %s", path, exc)
            return EXIT_INPUT
        if doc.document_id in seen:
            log.error("%s: document_id %r already used by %s", path, doc.document_id, seen[doc.document_id])
            return EXIT_INPUT
        seen[doc.document_id] = path
        docs.append(doc)

    results = extract_corpus(docs, g, cfg)

    out_dir = Path(args.output)
    written: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for r in results:
            target = output_path(out_dir, r.document_id)
            written.append(target)
            target.write_text(dump_extraction(r), encoding="utf-8")
    except OSError as exc:
        for path in written:
            path.unlink(missing_ok=True)
        log.error("cannot write output to %s: %s", out_dir, exc)
        return EXIT_UNWRITABLE
    total = sum(len(r.addresses()) for r in results)
    log.info("extracted %d addresses from %d documents", total, len(results))
    return EXIT_OK


def run_eval(args) -> int:
    truth_files = _expand(args.truth)
    if not truth_files:
        raise UsageError(f"no truth files match {args.truth}")
    pred_files = _expand(args.pred)
    try:
        report = evaluate_corpus(load_json_files(pred_files), load_json_files(truth_files))
    except (TruthSchemaError, OSError) as exc:
        log.error("evaluation input error: %s", exc)
        return EXIT_INPUT
    except EvaluationError as exc:
        log.error("%s", exc)
        for doc_id in exc.unknown:
            print(doc_id, file=sys.stderr)
        return EXIT_UNKNOWN_DOC
    table = report.to_table()
    report_path = Path(args.report)
    try:
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        table_path = report_path.with_suffix(".txt")
        if table_path == report_path:
            table_path = report_path.with_name(report_path.stem + ".table.txt")
        table_path.write_text(table, encoding="utf-8")
    except OSError as exc:
        log.error("cannot write report: %s", exc)
        return EXIT_UNWRITABLE
    sys.stdout.write(table)
    return EXIT_OK


def run_gen(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    try:
        noise = NoiseModel(args.noise_p, args.line_drop, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        g = load_gazetteer(args.gazetteer or default_gazetteer_dir())
    except GazetteerError as exc:
        log.error("gazetteer load failed: %s", exc)
        return EXIT_GAZETTEER
    try:
        manifest = generate_corpus(args.count, g, noise, args.out)
    except OSError as exc:
        log.error("cannot write corpus to %s: %s", args.out, exc)
        return EXIT_UNWRITABLE
    log.info("wrote %d letters, manifest %s", args.count, manifest)
    return EXIT_OK


COMMANDS = {"extract": run_extract, "eval": run_eval, "gen": run_gen}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        if args.command is None:
            raise UsageError("a subcommand is required")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"addrx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
