"""Line-level detection of address components.

Every detector returns :class:`ComponentCandidate` spans that index into the
original line text, so ``text[c.start:c.end] == c.surface`` always holds.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Optional

from .gazetteer import Gazetteer, fold, is_valid_zip


class ComponentKind(enum.IntEnum):
    # ordering doubles as the tie-break for candidates sharing a start offset
    ZIP = 0
    CITY = 1
    STREET_HOUSE = 2
    PO_BOX = 3
    PERSON_NAME = 4
    ORG_NAME = 5
    COUNTRY_LINE = 6


class LineClass(str, enum.Enum):
    ZIP_CITY = "zip_city"
    PO_BOX = "po_box"
    STREET = "street"
    COUNTRY = "country"
    ADDRESSEE = "addressee"
    OTHER = "other"


@dataclass(frozen=True)
class ComponentCandidate:
    kind: ComponentKind
    start: int
    end: int
    surface: str
    confidence: float
    note: Optional[str] = None
    value: Optional[str] = None  # canonical registry city, when kind is CITY

    @property
    def valid(self) -> bool:
        return self.confidence > 0.0


COUNTRY_NAMES = frozenset(
    {
        "deutschland",
        "germany",
        "bundesrepublik deutschland",
        "österreich",
        "austria",
        "schweiz",
        "switzerland",
        "frankreich",
        "france",
        "niederlande",
        "netherlands",
        "belgien",
        "belgium",
        "luxemburg",
        "luxembourg",
        "polen",
        "poland",
        "dänemark",
        "denmark",
        "italien",
        "italy",
    }
)

ZIP_TOKEN_RE = re.compile(r"(?<!\w)[0-9]{5}(?!\w)")
WORD_RE = re.compile(r"\S+")
HOUSE_NUMBER_RE = re.compile(r"[0-9]{1,4}(?:\s?[A-Za-z])?(?:\s?-\s?[0-9]{1,4}(?:\s?[A-Za-z])?)?(?![\w-])")
PO_BOX_RE = re.compile(r"\bPostfach\s+([0-9]+(?:[ .][0-9]+)*)", re.IGNORECASE)
SEPARATOR_RE = re.compile(r"[,;|·•]")
_EDGE_PUNCT = ",;:()[]\"'"
# Words that may precede a street name proper, as in "Am Alten Ring 3" or "Lange Straße 7".
_STREET_PREFIX_WORDS = frozenset(
    fold(w)
    for w in "Am An Auf Im In Zum Zur Der Die Den Dem Des Alte Alten Alter Neue Neuen "
    "Große Großer Kleine Kleiner Lange Langer Obere Oberer Untere Unterer Hohe Hoher".split()
)


@dataclass(frozen=True)
class _Token:
    start: int
    end: int
    text: str


def _tokens(text: str) -> list[_Token]:
    out = []
    for m in WORD_RE.finditer(text):
        s, e = m.start(), m.end()
        while s < e and text[s] in _EDGE_PUNCT:
            s += 1
        while e > s and text[e - 1] in _EDGE_PUNCT:
            e -= 1
        if s < e:
            out.append(_Token(s, e, text[s:e]))
    return out


def _is_capitalized(word: str) -> bool:
    return bool(word) and word[0].isupper() and any(c.isalpha() for c in word)


def _detect_zips(text: str, g: Gazetteer) -> list[ComponentCandidate]:
    out = []
    for m in ZIP_TOKEN_RE.finditer(text):
        tok = m.group()
        if is_valid_zip(g, tok):
            out.append(ComponentCandidate(ComponentKind.ZIP, m.start(), m.end(), tok, 1.0))
        else:
            out.append(ComponentCandidate(ComponentKind.ZIP, m.start(), m.end(), tok, 0.0, "invalid-zip"))
    return out


def _detect_cities(text: str, tokens: list[_Token], g: Gazetteer, max_edits: int) -> list[ComponentCandidate]:
    out = []
    words = [t for t in tokens if any(c.isalpha() for c in t.text)]
    i = 0
    max_n = g.max_city_words
    while i < len(words):
        found = None
        # exact matches over any n-gram beat fuzzy ones, longest first
        for edits in sorted({0, max_edits}):
            for n in range(min(max_n, len(words) - i), 0, -1):
                span = words[i : i + n]
                # n-grams must be contiguous in the source text (single spaces between)
                if any(not text[a.end : b.start].isspace() for a, b in zip(span, span[1:])):
                    continue
                start, end = span[0].start, span[-1].end
                hit = g.find_city(text[start:end], edits)
                if hit is not None:
                    found = (n, start, end, hit)
                    break
            if found:
                break
        if found is None:
            i += 1
            continue
        n, start, end, (canonical, dist) = found
        if dist == 0:
            out.append(ComponentCandidate(ComponentKind.CITY, start, end, text[start:end], 1.0, value=canonical))
        else:
            out.append(
                ComponentCandidate(
                    ComponentKind.CITY,
                    start,
                    end,
                    text[start:end],
                    1.0 - 0.25 * dist,
                    note=f"fuzzy:{dist}",
                    value=canonical,
                )
            )
        i += n
    return out


def _suffix_hit(word: str, suffixes: list[str]) -> Optional[str]:
    key = fold(word)
    for suffix in suffixes:
        if key.endswith(suffix):
            return suffix
    return None


def _detect_streets(text: str, tokens: list[_Token], g: Gazetteer) -> list[ComponentCandidate]:
    suffixes = sorted({fold(s) for s in g.street_suffixes}, key=len, reverse=True)
    out = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        # keep the trailing dot of abbreviations like "Hauptstr."
        word = text[tok.start : tok.end]
        suffix = _suffix_hit(word, suffixes)
        if suffix is None or not any(c.isalpha() for c in word):
            i += 1
            continue
        rest = text[tok.end :]
        gap = len(rest) - len(rest.lstrip())
        m = HOUSE_NUMBER_RE.match(text, tok.end + gap) if gap else None
        if m is None:
            i += 1
            continue
        first = i
        standalone = fold(word).rstrip(".") in {s.rstrip(".") for s in suffixes}
        if standalone and first > 0 and _is_capitalized(tokens[first - 1].text):
            first -= 1
        while first > 0 and fold(tokens[first - 1].text) in _STREET_PREFIX_WORDS:
            if SEPARATOR_RE.search(text[tokens[first - 1].end : tokens[first].start]):
                break
            first -= 1
        start = tokens[first].start
        out.append(ComponentCandidate(ComponentKind.STREET_HOUSE, start, m.end(), text[start : m.end()], 1.0))
        while i < len(tokens) and tokens[i].start < m.end():
            i += 1
    return out


def _detect_po_boxes(text: str) -> list[ComponentCandidate]:
    return [
        ComponentCandidate(ComponentKind.PO_BOX, m.start(), m.end(), m.group(), 1.0)
        for m in PO_BOX_RE.finditer(text)
    ]


def _segments(text: str) -> list[tuple[int, int]]:
    bounds, pos = [], 0
    for m in SEPARATOR_RE.finditer(text):
        bounds.append((pos, m.start()))
        pos = m.end()
    bounds.append((pos, len(text)))
    out = []
    for s, e in bounds:
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if s < e:
            out.append((s, e))
    return out


def _detect_orgs(text: str, tokens: list[_Token], g: Gazetteer) -> list[ComponentCandidate]:
    keyword_tokens = [t for t in tokens if t.text in g.org_keywords]
    out = []
    for s, e in _segments(text):
        if any(s <= t.start and t.end <= e for t in keyword_tokens):
            out.append(ComponentCandidate(ComponentKind.ORG_NAME, s, e, text[s:e], 1.0))
    return out


def _detect_persons(text: str, tokens: list[_Token], g: Gazetteer) -> list[ComponentCandidate]:
    out = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.text in g.honorifics:
            j = i + 1
            while j < len(tokens) and tokens[j].text in g.honorifics:
                j += 1
            k = j
            while k < len(tokens) and k - j < 3 and _is_capitalized(tokens[k].text):
                if tokens[k].text in g.org_keywords or any(c.isdigit() for c in tokens[k].text):
                    break
                k += 1
            if k > j:
                out.append(
                    ComponentCandidate(
                        ComponentKind.PERSON_NAME, tok.start, tokens[k - 1].end,
                        text[tok.start : tokens[k - 1].end], 1.0,
                    )
                )
                i = k
                continue
        elif (
            tok.text in g.first_names
            and i + 1 < len(tokens)
            and _is_capitalized(tokens[i + 1].text)
            and tokens[i + 1].text not in g.org_keywords
            and text[tok.end : tokens[i + 1].start].isspace()
        ):
            end = tokens[i + 1].end
            out.append(ComponentCandidate(ComponentKind.PERSON_NAME, tok.start, end, text[tok.start : end], 1.0))
            i += 2
            continue
        i += 1
    return out


def _detect_country(text: str) -> list[ComponentCandidate]:
    stripped = text.strip()
    if stripped and fold(stripped) in COUNTRY_NAMES:
        start = text.index(stripped)
        return [ComponentCandidate(ComponentKind.COUNTRY_LINE, start, start + len(stripped), stripped, 1.0)]
    return []


def detect_components(text: str, g: Gazetteer, max_edits: int = 1) -> list[ComponentCandidate]:
    """All address components found in one OCR line, left to right."""
    tokens = _tokens(text)
    found = (
        _detect_zips(text, g)
        + _detect_cities(text, tokens, g, max_edits)
        + _detect_streets(text, tokens, g)
        + _detect_po_boxes(text)
        + _detect_persons(text, tokens, g)
        + _detect_orgs(text, tokens, g)
        + _detect_country(text)
    )
    found.sort(key=lambda c: (c.start, c.kind, c.end))
    return found


def classify_line(text: str, components: list[ComponentCandidate]) -> LineClass:
    kinds = {c.kind for c in components if c.valid}
    if ComponentKind.ZIP in kinds and ComponentKind.CITY in kinds:
        return LineClass.ZIP_CITY
    if ComponentKind.PO_BOX in kinds:
        return LineClass.PO_BOX
    if ComponentKind.STREET_HOUSE in kinds:
        return LineClass.STREET
    if ComponentKind.COUNTRY_LINE in kinds:
        return LineClass.COUNTRY
    if kinds & {ComponentKind.PERSON_NAME, ComponentKind.ORG_NAME}:
        return LineClass.ADDRESSEE
    return LineClass.OTHER
