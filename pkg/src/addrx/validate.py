"""Final re-validation, normalisation and geocoding of labelled addresses."""

from __future__ import annotations

import enum
import json
import logging
import re
import socket
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Protocol, Sequence

from .classify import LabeledAddress
from .compose import AddressComponents
from .gazetteer import CityMatch, Gazetteer, MatchKind, is_valid_zip, zip_city_match

log = logging.getLogger(__name__)

DEFAULT_COUNTRY = "Deutschland"
MISMATCH_FACTOR = 0.5
_STR_ABBREV_RE = re.compile(r"([Ss])tr\.(?=\s|$)")

NormalizedAddress = AddressComponents


@dataclass(frozen=True)
class ValidationReport:
    zip_valid: bool
    zip_city: CityMatch
    complete: bool
    final_confidence: float


def revalidate(l: LabeledAddress, g: Gazetteer, max_edits: int = 1) -> ValidationReport:
    """Re-run the ZIP and ZIP/city checks on a labelled candidate."""
    comp = l.candidate.components
    conf = l.candidate.confidence
    zip_valid = comp.zip is not None and is_valid_zip(g, comp.zip)
    if zip_valid and comp.city:
        match = zip_city_match(g, comp.zip, comp.city, max_edits)
    elif zip_valid:
        match = CityMatch(MatchKind.MISMATCH)
    else:
        match = CityMatch(MatchKind.UNKNOWN_ZIP)
    complete = bool(comp.zip and comp.city) and (comp.street is None or comp.house_number is not None)
    if not zip_valid:
        factor = 0.0
    elif match.kind is MatchKind.MISMATCH:
        factor = MISMATCH_FACTOR
    else:
        factor = 1.0
    return ValidationReport(zip_valid, match, complete, conf * factor)


def _collapse(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    value = " ".join(value.split())
    return value or None


def normalize_address(c: AddressComponents, g: Gazetteer, max_edits: int = 1) -> NormalizedAddress:
    """Canonical city, expanded street abbreviation, collapsed whitespace, default country."""
    zip_code = c.zip
    city = _collapse(c.city)
    if zip_code and city:
        match = zip_city_match(g, zip_code, city, max_edits)
        if match.matched:
            city = match.matched_city
    street = _collapse(c.street)
    if street:
        street = _STR_ABBREV_RE.sub(lambda m: m.group(1) + "traße", street)
    return replace(
        c,
        addressee=_collapse(c.addressee),
        street=street,
        house_number=_collapse(c.house_number),
        po_box=_collapse(c.po_box),
        city=city,
        country=_collapse(c.country) or DEFAULT_COUNTRY,
    )


class GeocodeStatus(str, enum.Enum):
    MATCHED = "matched"
    AMBIGUOUS = "ambiguous"
    NOT_FOUND = "not_found"
    UNAVAILABLE = "unavailable"
    # only used in output files, when no backend is configured
    SKIPPED = "skipped"


@dataclass(frozen=True)
class GeocodeResult:
    status: GeocodeStatus
    lat: Optional[float] = None
    lon: Optional[float] = None

    def __post_init__(self) -> None:
        has_point = self.lat is not None and self.lon is not None
        if has_point != (self.status is GeocodeStatus.MATCHED):
            raise ValueError("coordinates are present exactly when status is matched")


class GeocodeBackend(Protocol):
    max_concurrency: int

    def lookup(self, address: NormalizedAddress) -> GeocodeResult: ...


class OfflineGeocoder:
    """Looks coordinates up in the gazetteer's optional geo points."""

    max_concurrency = 1

    def __init__(self, gazetteer: Gazetteer):
        self.gazetteer = gazetteer

    def lookup(self, address: NormalizedAddress) -> GeocodeResult:
        points = self.gazetteer.geo_points
        if address.zip and address.city and (address.zip, address.city) in points:
            lat, lon = points[(address.zip, address.city)]
            return GeocodeResult(GeocodeStatus.MATCHED, lat, lon)
        if address.zip and not address.city:
            hits = [p for (z, _), p in points.items() if z == address.zip]
            if len(hits) == 1:
                return GeocodeResult(GeocodeStatus.MATCHED, *hits[0])
            if hits:
                return GeocodeResult(GeocodeStatus.AMBIGUOUS)
        return GeocodeResult(GeocodeStatus.NOT_FOUND)


def address_query(a: NormalizedAddress) -> str:
    parts = []
    if a.street:
        parts.append(f"{a.street} {a.house_number or ''}".strip())
    elif a.po_box:
        parts.append(f"Postfach {a.po_box}")
    parts.append(" ".join(p for p in (a.zip, a.city) if p))
    if a.country:
        parts.append(a.country)
    return ", ".join(p for p in parts if p)


class RemoteGeocoder:
    """Client for a query-over-HTTP geocoding service.

    One GET per address with the free-text query in ``q``. The reply is JSON,
    either ``{"status": "matched", "lat": .., "lon": ..}`` or
    ``{"results": [{"lat": .., "lon": ..}, ...]}``. Every transport or decoding
    failure becomes an ``unavailable`` result.
    """

    def __init__(self, url: str, timeout: float = 2.0, max_concurrency: int = 4):
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        if max_concurrency < 1:
            raise ValueError("max_concurrency must be at least 1")
        self.url = url
        self.timeout = timeout
        self.max_concurrency = max_concurrency

    def _request(self, query: str) -> dict:
        sep = "&" if "?" in self.url else "?"
        full = f"{self.url}{sep}{urllib.parse.urlencode({'q': query})}"
        req = urllib.request.Request(full, headers={"Accept": "application/json"})
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))

    def lookup(self, address: NormalizedAddress) -> GeocodeResult:
        try:
            reply = self._request(address_query(address))
        except (urllib.error.URLError, socket.timeout, OSError, ValueError) as exc:
            log.debug("geocoding %s failed: %s", address_query(address), exc)
            return GeocodeResult(GeocodeStatus.UNAVAILABLE)
        return _parse_reply(reply)


def _parse_reply(reply: object) -> GeocodeResult:
    if not isinstance(reply, dict):
        return GeocodeResult(GeocodeStatus.UNAVAILABLE)
    try:
        if "results" in reply:
            results = reply["results"]
            if not results:
                return GeocodeResult(GeocodeStatus.NOT_FOUND)
            if len(results) > 1:
                return GeocodeResult(GeocodeStatus.AMBIGUOUS)
            return GeocodeResult(GeocodeStatus.MATCHED, float(results[0]["lat"]), float(results[0]["lon"]))
        status = GeocodeStatus(reply["status"])
        if status is GeocodeStatus.MATCHED:
            return GeocodeResult(status, float(reply["lat"]), float(reply["lon"]))
        if status is GeocodeStatus.SKIPPED:
            return GeocodeResult(GeocodeStatus.UNAVAILABLE)
        return GeocodeResult(status)
    except (KeyError, TypeError, ValueError):
        return GeocodeResult(GeocodeStatus.UNAVAILABLE)


def geocode(a: NormalizedAddress, backend: GeocodeBackend) -> GeocodeResult:
    try:
        return backend.lookup(a)
    except Exception as exc:  # a backend must never abort extraction
        log.warning("geocoder raised %r; treating as unavailable", exc)
        return GeocodeResult(GeocodeStatus.UNAVAILABLE)


def geocode_many(addresses: Sequence[NormalizedAddress], backend: GeocodeBackend) -> list[GeocodeResult]:
    """Geocode in input order with at most ``backend.max_concurrency`` requests in flight."""
    workers = max(1, int(getattr(backend, "max_concurrency", 1)))
    if workers == 1 or len(addresses) <= 1:
        return [geocode(a, backend) for a in addresses]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda a: geocode(a, backend), addresses))
