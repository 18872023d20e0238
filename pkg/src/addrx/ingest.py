"""Reading OCR-lines JSON files into :class:`~addrx.model.Document` objects.

The expected layout is::

    {"document_id": "...",
     "pages": [{"page_number": 1, "width_px": 2480, "height_px": 3508, "dpi": 300,
                "lines": [{"id": "l1", "text": "04109 Leipzig",
                           "bbox": [100, 200, 500, 240], "confidence": 0.95}]}]}

``dpi`` defaults to 300 and ``confidence`` to 1.0 when omitted.
"""

from __future__ import annotations

import enum
import json
import os
from typing import Any, BinaryIO, Union

from .model import BoundingBox, Document, Page, TextLine, ValidationError

DEFAULT_DPI = 300


class IngestErrorKind(str, enum.Enum):
    SYNTAX = "syntax"
    SCHEMA = "schema"
    GEOMETRY = "geometry"
    DUPLICATE_ID = "duplicate_id"


class IngestError(ValueError):
    def __init__(self, kind: IngestErrorKind, location: str, message: str):
        super().__init__(f"{kind.value} error at {location or '<root>'}: {message}")
        self.kind = kind
        self.location = location
        self.message = message

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IngestError):
            return NotImplemented
        return (self.kind, self.location, self.message) == (
            other.kind,
            other.location,
            other.message,
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.location, self.message))


def _schema(loc: str, msg: str) -> IngestError:
    return IngestError(IngestErrorKind.SCHEMA, loc, msg)


def _require(obj: dict, key: str, types: tuple, loc: str) -> Any:
    if key not in obj:
        raise _schema(f"{loc}.{key}" if loc else key, "missing field")
    value = obj[key]
    # bool is an int subclass; never accept it for numeric fields
    if isinstance(value, bool) or not isinstance(value, types):
        names = "/".join(t.__name__ for t in types)
        raise _schema(f"{loc}.{key}" if loc else key, f"expected {names}, got {type(value).__name__}")
    return value


def _positive_int(obj: dict, key: str, loc: str, default: int | None = None) -> int:
    if default is not None and key not in obj:
        return default
    value = _require(obj, key, (int,), loc)
    if value <= 0:
        raise _schema(f"{loc}.{key}", f"must be a positive integer, got {value}")
    return value


def _parse_line(raw: Any, loc: str) -> TextLine:
    if not isinstance(raw, dict):
        raise _schema(loc, "line must be an object")
    line_id = _require(raw, "id", (str,), loc)
    if not line_id:
        raise _schema(f"{loc}.id", "line id must be non-empty")
    text = _require(raw, "text", (str,), loc)
    bbox = _require(raw, "bbox", (list,), loc)
    if len(bbox) != 4 or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in bbox):
        raise _schema(f"{loc}.bbox", "bbox must be four numbers [x0, y0, x1, y1]")
    conf = raw.get("confidence", 1.0)
    if isinstance(conf, bool) or not isinstance(conf, (int, float)):
        raise _schema(f"{loc}.confidence", "confidence must be a number")
    if not 0.0 <= conf <= 1.0:
        raise _schema(f"{loc}.confidence", f"confidence {conf} outside [0, 1]")
    try:
        box = BoundingBox(*bbox)
    except ValidationError as exc:
        raise IngestError(IngestErrorKind.GEOMETRY, f"{loc}.bbox", str(exc)) from None
    return TextLine(id=line_id, text=text, bbox=box, ocr_confidence=float(conf))


def _parse_page(raw: Any, loc: str) -> Page:
    if not isinstance(raw, dict):
        raise _schema(loc, "page must be an object")
    number = _positive_int(raw, "page_number", loc)
    width = _positive_int(raw, "width_px", loc)
    height = _positive_int(raw, "height_px", loc)
    dpi = _positive_int(raw, "dpi", loc, default=DEFAULT_DPI)
    lines_raw = _require(raw, "lines", (list,), loc)
    lines = [_parse_line(item, f"{loc}.lines[{i}]") for i, item in enumerate(lines_raw)]
    return Page(page_number=number, width_px=width, height_px=height, dpi=dpi, lines=lines)


def document_from_dict(data: Any) -> Document:
    """Build a document from already-decoded JSON, raising on the first error."""
    if not isinstance(data, dict):
        raise _schema("", "top level must be an object")
    doc_id = _require(data, "document_id", (str,), "")
    pages_raw = _require(data, "pages", (list,), "")
    pages = [_parse_page(p, f"pages[{i}]") for i, p in enumerate(pages_raw)]
    doc = Document(document_id=doc_id, pages=pages)
    errors = validate_document(doc)
    if errors:
        raise errors[0]
    return doc


def parse_document(source: Union[bytes, str, BinaryIO]) -> Document:
    """Parse an OCR-lines document from bytes, text or a binary stream."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IngestError(IngestErrorKind.SYNTAX, "", f"invalid UTF-8: {exc}") from None
    try:
        data = json.loads(source)
    except json.JSONDecodeError as exc:
        raise IngestError(
            IngestErrorKind.SYNTAX, f"line {exc.lineno} column {exc.colno}", exc.msg
        ) from None
    return document_from_dict(data)


def read_document(path: Union[str, os.PathLike]) -> Document:
    with open(path, "rb") as fh:
        return parse_document(fh)


def validate_document(doc: Document) -> list[IngestError]:
    """Return every invariant violation in ``doc``; empty when valid."""
    errors: list[IngestError] = []
    numbers = [p.page_number for p in doc.pages]
    if any(b <= a for a, b in zip(numbers, numbers[1:])):
        errors.append(_schema("pages", f"page numbers not strictly increasing: {numbers}"))
    for pi, page in enumerate(doc.pages):
        if page.width_px <= 0 or page.height_px <= 0:
            errors.append(_schema(f"pages[{pi}]", "page dimensions must be positive"))
        seen: set[str] = set()
        for li, line in enumerate(page.lines):
            loc = f"pages[{pi}].lines[{li}]"
            if line.id in seen:
                errors.append(
                    IngestError(IngestErrorKind.DUPLICATE_ID, f"{loc}.id", f"duplicate line id {line.id!r}")
                )
            seen.add(line.id)
            b = line.bbox
            if b.x1 > page.width_px or b.y1 > page.height_px:
                errors.append(
                    IngestError(
                        IngestErrorKind.GEOMETRY,
                        f"{loc}.bbox",
                        f"box {b.as_list()} exceeds page {page.width_px}x{page.height_px}",
                    )
                )
    return errors


def _num(v: float) -> Union[int, float]:
    return int(v) if float(v).is_integer() else v


def document_to_dict(doc: Document) -> dict:
    return {
        "document_id": doc.document_id,
        "pages": [
            {
                "page_number": page.page_number,
                "width_px": _num(page.width_px),
                "height_px": _num(page.height_px),
                "dpi": page.dpi,
                "lines": [
                    {
                        "id": line.id,
                        "text": line.text,
                        "bbox": [_num(v) for v in line.bbox.as_list()],
                        "confidence": line.ocr_confidence,
                    }
                    for line in page.lines
                ],
            }
            for page in doc.pages
        ],
    }


def dump_document(doc: Document) -> str:
    return json.dumps(document_to_dict(doc), ensure_ascii=False, indent=2) + "\n"
