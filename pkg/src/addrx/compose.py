"""Grouping OCR lines into blocks and composing address candidates.

German addresses end in a ZIP + city line, so that line is the anchor and
the street and addressee are searched for upwards from it.
"""

from __future__ import annotations

import re
import statistics
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

from .detect import (
    HOUSE_NUMBER_RE,
    ComponentCandidate,
    ComponentKind,
    LineClass,
    classify_line,
    detect_components,
)
from .gazetteer import CityMatch, Gazetteer, MatchKind, zip_city_match
from .model import BoundingBox, Page, TextLine, bbox_union

SEARCH_WINDOW = 3
_TRAILING_HOUSE_RE = re.compile(r"^(?P<street>.*?\S)\s+(?P<house>" + HOUSE_NUMBER_RE.pattern + r")$")
_PO_DIGITS_RE = re.compile(r"[0-9][0-9 .]*[0-9]|[0-9]")


@dataclass(frozen=True)
class AddressComponents:
    addressee: Optional[str] = None
    street: Optional[str] = None
    house_number: Optional[str] = None
    po_box: Optional[str] = None
    zip: Optional[str] = None
    city: Optional[str] = None
    country: Optional[str] = None

    def __post_init__(self) -> None:
        if self.street is not None and self.po_box is not None:
            raise ValueError("an address has either a street or a PO box, not both")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "AddressComponents":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known and v is not None})


@dataclass(frozen=True)
class ComposeConfig:
    w_zip: float = 0.30
    w_city: float = 0.20
    w_street: float = 0.25
    w_addressee: float = 0.15
    bonus_match: float = 0.10
    penalty_mismatch: float = -0.20
    accept_threshold: float = 0.50
    gap_factor: float = 1.8
    max_block_lines: int = 8
    max_edits: int = 1

    def __post_init__(self) -> None:
        for name in ("w_zip", "w_city", "w_street", "w_addressee"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 < self.accept_threshold <= 1.0:
            raise ValueError("accept_threshold must lie in (0, 1]")
        if self.gap_factor <= 0:
            raise ValueError("gap_factor must be positive")
        if self.max_block_lines < 1:
            raise ValueError("max_block_lines must be at least 1")
        if self.max_edits < 0:
            raise ValueError("max_edits must be non-negative")


@dataclass(frozen=True)
class AddressCandidate:
    components: AddressComponents
    line_ids: tuple[str, ...]
    bbox: BoundingBox
    confidence: float
    zip_city: CityMatch
    text: str = ""
    anchor_id: str = ""
    sub_scores: dict = field(default_factory=dict, compare=False)


def _overlaps(a: TextLine, b: TextLine) -> bool:
    return a.bbox.x0 < b.bbox.x1 and b.bbox.x0 < a.bbox.x1


def _split_long(block: list[int], lines: Sequence[TextLine], limit: int) -> list[list[int]]:
    if len(block) <= limit:
        return [block]
    gaps = [lines[b].bbox.y0 - lines[a].bbox.y1 for a, b in zip(block, block[1:])]
    cut = gaps.index(max(gaps)) + 1
    return _split_long(block[:cut], lines, limit) + _split_long(block[cut:], lines, limit)


def group_blocks(page: Page, cfg: ComposeConfig = ComposeConfig()) -> list[list[int]]:
    """Partition the page's lines into vertically stacked, horizontally overlapping blocks.

    Returns lists of indices into ``page.lines``, each ordered top to bottom.
    """
    lines = page.lines
    if not lines:
        return []
    order = sorted(range(len(lines)), key=lambda i: (lines[i].bbox.y0, lines[i].bbox.x0, i))
    max_gap = cfg.gap_factor * statistics.median(l.bbox.height for l in lines)
    blocks: list[list[int]] = []
    for idx in order:
        line = lines[idx]
        best = None
        for bi, block in enumerate(blocks):
            last = lines[block[-1]]
            if line.bbox.y0 - last.bbox.y1 <= max_gap and _overlaps(line, last):
                # prefer the block that reaches furthest down
                if best is None or last.bbox.y1 > lines[blocks[best][-1]].bbox.y1:
                    best = bi
        if best is None:
            blocks.append([idx])
        else:
            blocks[best].append(idx)
    out: list[list[int]] = []
    for block in blocks:
        out.extend(_split_long(block, lines, cfg.max_block_lines))
    rank = {idx: r for r, idx in enumerate(order)}
    out.sort(key=lambda b: rank[b[0]])
    return out


def score_candidate(
    components: AddressComponents,
    zip_city: CityMatch,
    cfg: ComposeConfig = ComposeConfig(),
    zip_confidence: float = 1.0,
    city_confidence: float = 1.0,
) -> float:
    """Weighted sub-entity scores plus the ZIP/city plausibility term, clipped to [0, 1]."""
    s_zip = zip_confidence if components.zip else 0.0
    s_city = city_confidence if components.city else 0.0
    s_street = 1.0 if (components.street and components.house_number) or components.po_box else 0.0
    s_addressee = 1.0 if components.addressee else 0.0
    if zip_city.kind in (MatchKind.EXACT, MatchKind.FUZZY):
        plausibility = cfg.bonus_match
    elif zip_city.kind is MatchKind.MISMATCH:
        plausibility = cfg.penalty_mismatch
    else:
        plausibility = 0.0
    raw = (
        cfg.w_zip * s_zip
        + cfg.w_city * s_city
        + cfg.w_street * s_street
        + cfg.w_addressee * s_addressee
        + plausibility
    )
    return min(1.0, max(0.0, raw))


def split_street_house(surface: str) -> tuple[str, Optional[str]]:
    m = _TRAILING_HOUSE_RE.match(" ".join(surface.split()))
    if m is None:
        return surface.strip(), None
    return m.group("street"), m.group("house")


def _first(comps: list[ComponentCandidate], kind: ComponentKind) -> Optional[ComponentCandidate]:
    return next((c for c in comps if c.kind is kind), None)


def _addressee_on(comps: list[ComponentCandidate]) -> Optional[str]:
    for c in comps:
        if c.kind in (ComponentKind.ORG_NAME, ComponentKind.PERSON_NAME):
            return c.surface
    return None


def compose_addresses(
    lines: Sequence[TextLine], g: Gazetteer, cfg: ComposeConfig = ComposeConfig()
) -> list[AddressCandidate]:
    """Address candidates for one block of lines given in top-to-bottom order."""
    comps = [detect_components(l.text, g, cfg.max_edits) for l in lines]
    classes = [classify_line(l.text, c) for l, c in zip(lines, comps)]
    out = []
    for idx, cls in enumerate(classes):
        if cls is not LineClass.ZIP_CITY:
            continue
        zip_c = next((c for c in comps[idx] if c.kind is ComponentKind.ZIP and c.valid), None)
        if zip_c is None or zip_c.note == "invalid-zip":
            continue
        cities = [c for c in comps[idx] if c.kind is ComponentKind.CITY]
        city_c = next((c for c in cities if c.start >= zip_c.end), cities[0])

        window = []
        for j in range(idx - 1, max(-1, idx - 1 - SEARCH_WINDOW), -1):
            if classes[j] is LineClass.ZIP_CITY:
                break
            window.append(j)

        street = house = po_box = addressee = None
        used = [idx]
        street_line = None
        anchor_street = _first(comps[idx], ComponentKind.STREET_HOUSE)
        anchor_box = _first(comps[idx], ComponentKind.PO_BOX)
        if anchor_box is not None:
            street_line, po_box = idx, anchor_box.surface
        elif anchor_street is not None:
            street_line = idx
            street, house = split_street_house(anchor_street.surface)
        else:
            for j in window:
                if classes[j] is LineClass.PO_BOX:
                    street_line, po_box = j, _first(comps[j], ComponentKind.PO_BOX).surface
                    break
                if classes[j] is LineClass.STREET:
                    street_line = j
                    street, house = split_street_house(_first(comps[j], ComponentKind.STREET_HOUSE).surface)
                    break
        if street_line is not None:
            used.append(street_line)
            addressee = _addressee_on(comps[street_line])
        if addressee is None:
            above = street_line if street_line is not None else idx
            for j in window:
                if j < above and classes[j] is LineClass.ADDRESSEE:
                    addressee = " ".join(lines[j].text.split())
                    used.append(j)
                    break
        if po_box is not None:
            m = _PO_DIGITS_RE.search(po_box[len("postfach") :])
            po_box = " ".join(m.group().split()) if m else po_box
        country = None
        bottom = idx
        if idx + 1 < len(lines) and classes[idx + 1] is LineClass.COUNTRY:
            country = " ".join(lines[idx + 1].text.split())
            bottom = idx + 1

        members = list(lines[min(used) : bottom + 1])
        components = AddressComponents(
            addressee=addressee,
            street=street,
            house_number=house,
            po_box=po_box,
            zip=zip_c.surface,
            city=" ".join(city_c.surface.split()),
            country=country,
        )
        match = zip_city_match(g, zip_c.surface, city_c.surface, cfg.max_edits)
        if match.kind is MatchKind.UNKNOWN_ZIP:
            continue
        confidence = score_candidate(components, match, cfg, zip_c.confidence, city_c.confidence)
        if confidence < cfg.accept_threshold:
            continue
        out.append(
            AddressCandidate(
                components=components,
                line_ids=tuple(l.id for l in members),
                bbox=bbox_union(l.bbox for l in members),
                confidence=confidence,
                zip_city=match,
                text=" ".join(" ".join(l.text.split()) for l in members if l.text.strip()),
                anchor_id=lines[idx].id,
                sub_scores={"zip": zip_c.confidence, "city": city_c.confidence},
            )
        )
    return out


def compose_page(page: Page, g: Gazetteer, cfg: ComposeConfig = ComposeConfig()) -> list[AddressCandidate]:
    """All accepted candidates on a page, ordered by anchor position."""
    candidates = []
    for block in group_blocks(page, cfg):
        candidates.extend(compose_addresses([page.lines[i] for i in block], g, cfg))
    anchors = {l.id: l.bbox for l in page.lines}
    candidates.sort(key=lambda c: (anchors[c.anchor_id].y0, anchors[c.anchor_id].x0))
    return candidates
