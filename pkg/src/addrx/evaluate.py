"""Scoring predicted address regions against ground truth.

A prediction is a true positive when its text holds the ZIP code and city
of an unmatched ground-truth address of the same class (plus street and
house number when the truth has them). A prediction containing no address
at all is a false positive. A prediction that holds an address of another
class counts as neither; that address simply stays a false negative.
True negatives are not counted.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .classify import LabeledAddress
from .compose import AddressComponents
from .model import AddressLabel, BoundingBox

LABEL_ORDER = (AddressLabel.SENDER, AddressLabel.RECEIVER, AddressLabel.OTHER)


class EvaluationError(Exception):
    """Predictions reference documents or pages absent from the truth set."""

    def __init__(self, unknown: Sequence[str]):
        super().__init__("predictions reference unknown documents/pages: " + ", ".join(unknown))
        self.unknown = list(unknown)


class TruthSchemaError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruthAddress:
    label: AddressLabel
    components: AddressComponents
    bbox: Optional[BoundingBox] = None

    def __post_init__(self) -> None:
        if not self.components.zip or not self.components.city:
            raise ValueError("ground-truth addresses need zip and city")


@dataclass(frozen=True)
class Prediction:
    label: AddressLabel
    confidence: float
    text: str
    bbox: Optional[BoundingBox] = None


@dataclass(frozen=True)
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "ClassCounts") -> "ClassCounts":
        return ClassCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def f1(c: ClassCounts) -> float:
    denom = 2 * c.tp + c.fp + c.fn
    return 2 * c.tp / denom if denom else 0.0


def _norm(text: str) -> str:
    return " ".join(unicodedata.normalize("NFC", text).casefold().split())


def matches_truth(pred_text: str, gt: GroundTruthAddress) -> bool:
    hay = _norm(pred_text)
    c = gt.components
    needles = [c.zip, c.city]
    if c.street:
        needles.append(c.street)
    if c.house_number:
        needles.append(c.house_number)
    return all(_norm(n) in hay for n in needles if n)


def _prediction_from_labeled(l: LabeledAddress) -> Prediction:
    cand = l.candidate
    extra = [v for v in cand.components.to_dict().values()]
    if cand.zip_city.matched_city:
        extra.append(cand.zip_city.matched_city)
    return Prediction(l.label, cand.confidence, " ".join([cand.text, *extra]), cand.bbox)


def count_page(
    preds: Sequence[Union[Prediction, LabeledAddress]], gts: Sequence[GroundTruthAddress]
) -> dict[AddressLabel, ClassCounts]:
    preds = [p if isinstance(p, Prediction) else _prediction_from_labeled(p) for p in preds]
    order = sorted(
        range(len(preds)),
        key=lambda i: (
            -preds[i].confidence,
            preds[i].bbox.y0 if preds[i].bbox else 0.0,
            preds[i].bbox.x0 if preds[i].bbox else 0.0,
            i,
        ),
    )
    tp = {label: 0 for label in LABEL_ORDER}
    fp = {label: 0 for label in LABEL_ORDER}
    consumed = [False] * len(gts)
    for i in order:
        pred = preds[i]
        hit = next(
            (
                k
                for k, gt in enumerate(gts)
                if not consumed[k] and gt.label == pred.label and matches_truth(pred.text, gt)
            ),
            None,
        )
        if hit is not None:
            consumed[hit] = True
            tp[pred.label] += 1
        elif not any(matches_truth(pred.text, gt) for gt in gts):
            fp[pred.label] += 1
    fn = {label: 0 for label in LABEL_ORDER}
    for k, gt in enumerate(gts):
        if not consumed[k]:
            fn[gt.label] += 1
    return {label: ClassCounts(tp[label], fp[label], fn[label]) for label in LABEL_ORDER}


@dataclass
class EvalReport:
    counts: dict[AddressLabel, ClassCounts] = field(
        default_factory=lambda: {label: ClassCounts() for label in LABEL_ORDER}
    )
    documents: int = 0
    pages: int = 0

    @property
    def all(self) -> ClassCounts:
        total = ClassCounts()
        for label in LABEL_ORDER:
            total = total + self.counts[label]
        return total

    def add(self, page_counts: Mapping[AddressLabel, ClassCounts]) -> None:
        for label, c in page_counts.items():
            self.counts[label] = self.counts[label] + c

    def rows(self) -> list[tuple[str, ClassCounts]]:
        return [(label.value.capitalize(), self.counts[label]) for label in LABEL_ORDER] + [("All", self.all)]

    def to_dict(self) -> dict:
        return {
            "documents": self.documents,
            "pages": self.pages,
            "classes": {
                name.lower(): {"tp": c.tp, "fp": c.fp, "fn": c.fn, "f1": round(f1(c), 4)}
                for name, c in self.rows()
            },
        }

    def to_table(self) -> str:
        lines = [f"{'':<10}{'TP':>6}{'FP':>6}{'FN':>6}{'F1':>9}"]
        for name, c in self.rows():
            lines.append(f"{name:<10}{c.tp:>6}{c.fp:>6}{c.fn:>6}{f1(c):>9.4f}")
        lines.append(f"({self.documents} documents, {self.pages} pages)")
        return "\n".join(lines) + "\n"


def _bbox(raw, where: str) -> Optional[BoundingBox]:
    if raw is None:
        return None
    try:
        return BoundingBox(*raw)
    except (TypeError, ValueError) as exc:
        raise TruthSchemaError(f"{where}.bbox: {exc}") from None


def _label(raw, where: str) -> AddressLabel:
    try:
        return AddressLabel(raw)
    except ValueError:
        raise TruthSchemaError(f"{where}.label: unknown label {raw!r}") from None


def _pages(data, kind: str) -> tuple[str, list]:
    if not isinstance(data, dict) or not isinstance(data.get("document_id"), str):
        raise TruthSchemaError(f"{kind} file needs a string document_id")
    pages = data.get("pages")
    if not isinstance(pages, list):
        raise TruthSchemaError(f"{kind} file {data['document_id']}: pages must be a list")
    return data["document_id"], pages


def parse_truth(data) -> tuple[str, dict[int, list[GroundTruthAddress]]]:
    doc_id, pages = _pages(data, "truth")
    out: dict[int, list[GroundTruthAddress]] = {}
    for pi, page in enumerate(pages):
        where = f"{doc_id}:pages[{pi}]"
        if not isinstance(page, dict) or not isinstance(page.get("page_number"), int):
            raise TruthSchemaError(f"{where}: page_number missing")
        addresses = []
        for ai, raw in enumerate(page.get("addresses", [])):
            w = f"{where}.addresses[{ai}]"
            comps = raw.get("components") if isinstance(raw, dict) else None
            if not isinstance(comps, dict) or not comps.get("zip") or not comps.get("city"):
                raise TruthSchemaError(f"{w}: components.zip and components.city are required")
            addresses.append(
                GroundTruthAddress(
                    _label(raw.get("label"), w), AddressComponents.from_dict(comps), _bbox(raw.get("bbox"), w)
                )
            )
        out[page["page_number"]] = addresses
    return doc_id, out


def prediction_text(record: Mapping) -> str:
    """Region text of an output record plus its normalised component values."""
    parts = [record.get("text", "")]
    for key in ("components", "normalized"):
        parts.extend(str(v) for v in (record.get(key) or {}).values() if v)
    return " ".join(p for p in parts if p)


def parse_predictions(data) -> tuple[str, dict[int, list[Prediction]]]:
    doc_id, pages = _pages(data, "prediction")
    out: dict[int, list[Prediction]] = {}
    for pi, page in enumerate(pages):
        where = f"{doc_id}:pages[{pi}]"
        if not isinstance(page, dict) or not isinstance(page.get("page_number"), int):
            raise TruthSchemaError(f"{where}: page_number missing")
        preds = []
        for ai, rec in enumerate(page.get("addresses", [])):
            w = f"{where}.addresses[{ai}]"
            if not isinstance(rec, dict):
                raise TruthSchemaError(f"{w}: address must be an object")
            conf = rec.get("confidence", 0.0)
            if isinstance(conf, bool) or not isinstance(conf, (int, float)):
                raise TruthSchemaError(f"{w}.confidence must be a number")
            preds.append(Prediction(_label(rec.get("label"), w), float(conf), prediction_text(rec), _bbox(rec.get("bbox"), w)))
        out[page["page_number"]] = preds
    return doc_id, out


def evaluate_corpus(pred_docs: Iterable, truth_docs: Iterable) -> EvalReport:
    """Sum page counts over a corpus; inputs are decoded JSON documents."""
    truth: dict[str, dict[int, list[GroundTruthAddress]]] = {}
    for data in truth_docs:
        doc_id, pages = parse_truth(data)
        truth[doc_id] = pages
    preds: dict[str, dict[int, list[Prediction]]] = {}
    for data in pred_docs:
        doc_id, pages = parse_predictions(data)
        preds.setdefault(doc_id, {}).update(pages)

    unknown = []
    for doc_id in sorted(preds):
        if doc_id not in truth:
            unknown.append(doc_id)
            continue
        unknown.extend(f"{doc_id}#page{n}" for n in sorted(preds[doc_id]) if n not in truth[doc_id])
    if unknown:
        raise EvaluationError(unknown)

    report = EvalReport(documents=len(truth), pages=sum(len(p) for p in truth.values()))
    for doc_id in sorted(truth):
        for number, gts in sorted(truth[doc_id].items()):
            report.add(count_page(preds.get(doc_id, {}).get(number, []), gts))
    return report


def load_json_files(paths: Iterable[str]) -> list:
    out = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            try:
                out.append(json.load(fh))
            except json.JSONDecodeError as exc:
                raise TruthSchemaError(f"{path}: {exc}") from None
    return out
