"""Geometry and document types shared by every pipeline stage.

All types are frozen dataclasses; coordinates are stored as floats even
though OCR engines report integer pixels.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class ValidationError(ValueError):
    """Raised when a geometric or document invariant does not hold."""


@dataclass(frozen=True)
class BoundingBox:
    """Pixel box, origin top-left, ``x0 < x1`` and ``y0 < y1``."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        for name in ("x0", "y0", "x1", "y1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if min(self.x0, self.y0, self.x1, self.y1) < 0:
            raise ValidationError(f"negative coordinate in {self.as_list()}")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValidationError(f"degenerate box {self.as_list()}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]

    def as_int_list(self) -> list[int]:
        return [int(round(v)) for v in self.as_list()]


@dataclass(frozen=True)
class NormalizedRect:
    """Rectangle in page-relative coordinates, each value in [0, 1]."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        for name in ("x0", "y0", "x1", "y1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = (self.x0, self.y0, self.x1, self.y1)
        if any(v < 0.0 or v > 1.0 for v in vals):
            raise ValidationError(f"normalized rect out of [0,1]: {vals}")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValidationError(f"degenerate normalized rect {vals}")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass(frozen=True)
class TextLine:
    id: str
    text: str
    bbox: BoundingBox
    ocr_confidence: float = 1.0

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("line id must be non-empty")
        if not 0.0 <= self.ocr_confidence <= 1.0:
            raise ValidationError(f"ocr confidence {self.ocr_confidence} outside [0,1]")


@dataclass(frozen=True)
class Page:
    page_number: int
    width_px: float
    height_px: float
    dpi: int = 300
    lines: tuple[TextLine, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "lines", tuple(self.lines))

    def line_by_id(self, line_id: str) -> TextLine:
        for line in self.lines:
            if line.id == line_id:
                return line
        raise KeyError(line_id)


@dataclass(frozen=True)
class Document:
    document_id: str
    pages: tuple[Page, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pages", tuple(self.pages))


class AddressLabel(str, enum.Enum):
    SENDER = "sender"
    RECEIVER = "receiver"
    OTHER = "other"


def bbox_union(boxes: Iterable[BoundingBox]) -> BoundingBox:
    """Smallest box containing every box in ``boxes``."""
    boxes = list(boxes)
    if not boxes:
        raise ValueError("bbox_union needs at least one box")
    return BoundingBox(
        min(b.x0 for b in boxes),
        min(b.y0 for b in boxes),
        max(b.x1 for b in boxes),
        max(b.y1 for b in boxes),
    )


def normalize_bbox(box: BoundingBox, page: Page) -> NormalizedRect:
    if page.width_px <= 0 or page.height_px <= 0:
        raise ValidationError(
            f"page {page.page_number} has non-positive size {page.width_px}x{page.height_px}"
        )
    if box.x1 > page.width_px or box.y1 > page.height_px:
        raise ValidationError(f"box {box.as_list()} outside page {page.page_number}")
    return NormalizedRect(
        box.x0 / page.width_px,
        box.y0 / page.height_px,
        box.x1 / page.width_px,
        box.y1 / page.height_px,
    )


def zone_overlap(rect: NormalizedRect, zone: NormalizedRect) -> float:
    """Fraction of ``rect``'s area that lies inside ``zone``."""
    w = min(rect.x1, zone.x1) - max(rect.x0, zone.x0)
    h = min(rect.y1, zone.y1) - max(rect.y0, zone.y0)
    if w <= 0 or h <= 0:
        return 0.0
    return min(1.0, (w * h) / rect.area)


def line_texts(lines: Sequence[TextLine]) -> str:
    return " ".join(line.text.strip() for line in lines if line.text.strip())
