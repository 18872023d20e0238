"""Reference lists (ZIP registry, names, legal forms) and fuzzy lookups."""

from __future__ import annotations

import enum
import os
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Mapping, Optional

ZIP_RE = re.compile(r"^[0-9]{5}$")

ZIP_CITY_FILE = "zip_city.tsv"
LIST_FILES = ("first_names.txt", "org_keywords.txt", "honorifics.txt", "street_suffixes.txt")

# Fuzzy city lookups below this length match too many ordinary words.
MIN_FUZZY_LENGTH = 4
_INDEXED_EDITS = 2


class GazetteerError(Exception):
    def __init__(self, path: str | os.PathLike, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line
        self.message = message


def fold(text: str) -> str:
    """Comparison key: NFC, trimmed, inner whitespace collapsed, case-folded.

    ``str.casefold`` already maps "ß" to "ss".
    """
    text = unicodedata.normalize("NFC", text)
    return " ".join(text.split()).casefold()


def edit_distance(a: str, b: str) -> int:
    """Unrestricted Damerau-Levenshtein distance between :func:`fold` keys.

    Unlike the optimal-string-alignment variant this satisfies the triangle
    inequality, e.g. ``edit_distance("ca", "abc") == 2``.
    """
    a, b = fold(a), fold(b)
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if not la or not lb:
        return la or lb
    inf = la + lb
    # d[i+1][j+1] holds the distance between a[:i] and b[:j]
    d = [[inf] * (lb + 2)]
    d += [[inf] + [0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        d[i + 1][1] = i
    for j in range(lb + 1):
        d[1][j + 1] = j
    last_row: dict[str, int] = {}
    for i in range(1, la + 1):
        ca = a[i - 1]
        last_match_col = 0
        row, prev = d[i + 1], d[i]
        for j in range(1, lb + 1):
            cb = b[j - 1]
            i1 = last_row.get(cb, 0)
            j1 = last_match_col
            if ca == cb:
                cost = 0
                last_match_col = j
            else:
                cost = 1
            row[j + 1] = min(
                prev[j] + cost,
                row[j] + 1,
                prev[j + 1] + 1,
                d[i1][j1] + (i - i1 - 1) + 1 + (j - j1 - 1),
            )
        last_row[ca] = i
    return d[la + 1][lb + 1]


class MatchKind(str, enum.Enum):
    EXACT = "exact"
    FUZZY = "fuzzy"
    MISMATCH = "mismatch"
    UNKNOWN_ZIP = "unknown_zip"


@dataclass(frozen=True)
class CityMatch:
    kind: MatchKind
    matched_city: Optional[str] = None
    distance: int = 0

    @property
    def matched(self) -> bool:
        return self.kind in (MatchKind.EXACT, MatchKind.FUZZY)


def _deletions(word: str, k: int) -> set[str]:
    out = {word}
    for n in range(1, min(k, len(word)) + 1):
        for idx in combinations(range(len(word)), n):
            skip = set(idx)
            out.add("".join(c for i, c in enumerate(word) if i not in skip))
    return out


@dataclass(frozen=True)
class Gazetteer:
    zip_to_cities: Mapping[str, frozenset[str]]
    org_keywords: frozenset[str]
    honorifics: frozenset[str]
    first_names: frozenset[str]
    street_suffixes: tuple[str, ...]
    geo_points: Mapping[tuple[str, str], tuple[float, float]] = field(default_factory=dict)
    city_index: frozenset[str] = field(init=False)
    _canonical: Mapping[str, str] = field(init=False, repr=False, compare=False)
    _deletion_index: Mapping[str, frozenset[str]] = field(init=False, repr=False, compare=False)
    _max_city_words: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for z in self.zip_to_cities:
            if not ZIP_RE.match(z):
                raise ValueError(f"registry key {z!r} is not a 5-digit ZIP")
        canonical: dict[str, str] = {}
        for cities in self.zip_to_cities.values():
            for city in sorted(cities):
                canonical.setdefault(fold(city), city)
        index: dict[str, set[str]] = {}
        for key in canonical:
            for variant in _deletions(key, _INDEXED_EDITS):
                index.setdefault(variant, set()).add(key)
        set_ = object.__setattr__
        set_(self, "city_index", frozenset(canonical))
        set_(self, "_canonical", canonical)
        set_(self, "_deletion_index", {k: frozenset(v) for k, v in index.items()})
        set_(self, "_max_city_words", max((len(c.split()) for c in canonical), default=1))

    @property
    def max_city_words(self) -> int:
        return self._max_city_words

    def canonical_city(self, name: str) -> Optional[str]:
        return self._canonical.get(fold(name))

    def find_city(self, text: str, max_edits: int) -> Optional[tuple[str, int]]:
        """Best registry city for ``text`` as ``(canonical name, distance)``."""
        key = fold(text)
        if key in self._canonical:
            return self._canonical[key], 0
        if max_edits <= 0 or len(key) < MIN_FUZZY_LENGTH:
            return None
        if max_edits <= _INDEXED_EDITS:
            pool: set[str] = set()
            for variant in _deletions(key, max_edits):
                pool |= self._deletion_index.get(variant, frozenset())
        else:
            pool = {c for c in self._canonical if abs(len(c) - len(key)) <= max_edits}
        best: Optional[tuple[int, str]] = None
        for cand in pool:
            if abs(len(cand) - len(key)) > max_edits:
                continue
            d = edit_distance(key, cand)
            if d <= max_edits:
                entry = (d, self._canonical[cand])
                if best is None or entry < best:
                    best = entry
        if best is None:
            return None
        return best[1], best[0]


def is_valid_zip(g: Gazetteer, token: str) -> bool:
    """Five ASCII digits that appear in the registry."""
    return bool(ZIP_RE.match(token)) and token in g.zip_to_cities


def zip_city_match(g: Gazetteer, zip_code: str, city: str, max_edits: int = 1) -> CityMatch:
    if not is_valid_zip(g, zip_code):
        return CityMatch(MatchKind.UNKNOWN_ZIP)
    key = fold(city)
    registered = sorted(g.zip_to_cities[zip_code])
    for name in registered:
        if fold(name) == key:
            return CityMatch(MatchKind.EXACT, name)
    if max_edits > 0:
        scored = sorted((edit_distance(key, fold(name)), name) for name in registered)
        d, name = scored[0]
        if d <= max_edits:
            return CityMatch(MatchKind.FUZZY, name, d)
    return CityMatch(MatchKind.MISMATCH)


def default_gazetteer_dir() -> Path:
    """Directory of the bundled desk-scale fixtures."""
    return Path(str(resources.files("addrx") / "data" / "gazetteer"))


def _data_lines(path: Path):
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\r\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                yield lineno, line
    except FileNotFoundError:
        raise GazetteerError(path, None, "missing reference file") from None
    except UnicodeDecodeError as exc:
        raise GazetteerError(path, None, f"not UTF-8: {exc}") from None


def _load_list(path: Path) -> list[str]:
    seen: dict[str, None] = {}
    for _, line in _data_lines(path):
        seen.setdefault(" ".join(line.split()), None)
    if not seen:
        raise GazetteerError(path, None, "reference list is empty")
    return list(seen)


def load_gazetteer(directory: str | os.PathLike) -> Gazetteer:
    directory = Path(directory)
    if not directory.is_dir():
        raise GazetteerError(directory, None, "gazetteer directory does not exist")
    zip_path = directory / ZIP_CITY_FILE
    registry: dict[str, set[str]] = {}
    geo: dict[tuple[str, str], tuple[float, float]] = {}
    for lineno, line in _data_lines(zip_path):
        cols = [c.strip() for c in line.split("\t")]
        if len(cols) not in (2, 4):
            raise GazetteerError(zip_path, lineno, f"expected 2 or 4 tab-separated columns, got {len(cols)}")
        zip_code, city = cols[0], " ".join(cols[1].split())
        if not ZIP_RE.match(zip_code):
            raise GazetteerError(zip_path, lineno, f"ZIP {zip_code!r} is not exactly 5 digits")
        if not city:
            raise GazetteerError(zip_path, lineno, "empty city name")
        registry.setdefault(zip_code, set()).add(city)
        if len(cols) == 4:
            try:
                lat, lon = float(cols[2]), float(cols[3])
            except ValueError:
                raise GazetteerError(zip_path, lineno, "latitude/longitude must be numbers") from None
            if not (-90 <= lat <= 90 and -180 <= lon <= 180):
                raise GazetteerError(zip_path, lineno, "coordinates out of range")
            geo.setdefault((zip_code, city), (lat, lon))
    if not registry:
        raise GazetteerError(zip_path, None, "registry is empty")
    names, orgs, honorifics, suffixes = (_load_list(directory / name) for name in LIST_FILES)
    return Gazetteer(
        zip_to_cities={z: frozenset(c) for z, c in sorted(registry.items())},
        org_keywords=frozenset(orgs),
        honorifics=frozenset(honorifics),
        first_names=frozenset(names),
        street_suffixes=tuple(suffixes),
        geo_points=geo,
    )
