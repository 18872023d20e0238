"""End-to-end extraction: compose, label, re-validate, normalise, geocode."""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .classify import LabeledAddress, LabelScorer, LayoutZones, assign_labels
from .compose import AddressComponents, ComposeConfig, compose_page
from .gazetteer import Gazetteer
from .model import Document, NormalizedRect, Page
from .validate import (
    GeocodeResult,
    GeocodeStatus,
    OfflineGeocoder,
    RemoteGeocoder,
    ValidationReport,
    geocode_many,
    normalize_address,
    revalidate,
)

GEOCODE_BACKENDS = ("offline", "remote", "none")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeocodeConfig:
    backend: str = "offline"
    url: Optional[str] = None
    timeout_ms: int = 2000
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.backend not in GEOCODE_BACKENDS:
            raise ConfigError(f"geocode backend must be one of {GEOCODE_BACKENDS}, got {self.backend!r}")
        if self.backend == "remote" and not self.url:
            raise ConfigError("remote geocoding needs a url")
        if self.timeout_ms <= 0:
            raise ConfigError("timeout_ms must be positive")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be at least 1")


@dataclass(frozen=True)
class PipelineConfig:
    gazetteer_dir: Optional[str] = None
    max_edits: int = 1
    compose: ComposeConfig = field(default_factory=ComposeConfig)
    zones: LayoutZones = field(default_factory=LayoutZones)
    geocode: GeocodeConfig = field(default_factory=GeocodeConfig)
    parallelism: int = field(default_factory=lambda: os.cpu_count() or 1)

    def __post_init__(self) -> None:
        if isinstance(self.max_edits, bool) or not isinstance(self.max_edits, int) or self.max_edits < 0:
            raise ConfigError("max_edits must be a non-negative integer")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")
        if self.compose.max_edits != self.max_edits:
            object.__setattr__(self, "compose", replace(self.compose, max_edits=self.max_edits))

    def backend(self, g: Gazetteer):
        if self.geocode.backend == "offline":
            return OfflineGeocoder(g)
        if self.geocode.backend == "remote":
            return RemoteGeocoder(self.geocode.url, self.geocode.timeout_ms / 1000.0, self.geocode.max_concurrency)
        return None


def _typed(section: str, cls, raw: Any, converters: Mapping[str, Any] = {}):
    if not isinstance(raw, dict):
        raise ConfigError(f"{section} must be an object")
    allowed = {f.name: f for f in fields(cls) if f.init}
    kwargs = {}
    for key, value in raw.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key}")
        if key in converters:
            try:
                value = converters[key](value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from None
        else:
            default = getattr(cls(), key) if section != "config" else None
            if default is not None and not _same_type(value, default):
                raise ConfigError(f"{section}.{key} must be {type(default).__name__}, got {value!r}")
        kwargs[key] = value
    return kwargs


def _same_type(value: Any, default: Any) -> bool:
    if isinstance(value, bool) or isinstance(default, bool):
        return type(value) is type(default)
    if isinstance(default, float):
        return isinstance(value, (int, float))
    return isinstance(value, type(default))


def _rect(value: Any) -> NormalizedRect:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ValueError("zone must be [x0, y0, x1, y1]")
    return NormalizedRect(*value)


def config_from_mapping(data: Mapping[str, Any], base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Merge a decoded config file over ``base`` (defaults when omitted)."""
    base = base or PipelineConfig()
    if not isinstance(data, dict):
        raise ConfigError("config must be an object")
    allowed = {"gazetteer_dir", "max_edits", "compose", "zones", "geocode", "parallelism"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        compose = replace(base.compose, **_typed("compose", ComposeConfig, data.get("compose", {})))
        zone_conv = {k: _rect for k in ("receiver_zone", "sender_zone", "letterhead_zone")}
        zones = replace(base.zones, **_typed("zones", LayoutZones, data.get("zones", {}), zone_conv))
        geocode = replace(base.geocode, **_typed("geocode", GeocodeConfig, data.get("geocode", {})))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    updates: dict[str, Any] = {"compose": compose, "zones": zones, "geocode": geocode}
    if "gazetteer_dir" in data:
        if not isinstance(data["gazetteer_dir"], str):
            raise ConfigError("gazetteer_dir must be a string")
        updates["gazetteer_dir"] = data["gazetteer_dir"]
    for key in ("max_edits", "parallelism"):
        if key in data:
            if isinstance(data[key], bool) or not isinstance(data[key], int):
                raise ConfigError(f"{key} must be an integer")
            updates[key] = data[key]
    if "max_edits" not in data and "max_edits" in data.get("compose", {}):
        updates["max_edits"] = compose.max_edits
    try:
        return replace(base, **updates)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | os.PathLike, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_mapping(data, base)


@dataclass(frozen=True)
class ExtractedAddress:
    labeled: LabeledAddress
    report: ValidationReport
    normalized: AddressComponents
    geocode: Optional[GeocodeResult] = None


@dataclass(frozen=True)
class PageExtraction:
    page_number: int
    addresses: tuple[ExtractedAddress, ...]


@dataclass(frozen=True)
class DocumentExtraction:
    document_id: str
    pages: tuple[PageExtraction, ...]

    def addresses(self) -> list[ExtractedAddress]:
        return [a for p in self.pages for a in p.addresses]


def extract_page(
    page: Page,
    g: Gazetteer,
    cfg: PipelineConfig = PipelineConfig(),
    scorer: Optional[LabelScorer] = None,
) -> PageExtraction:
    candidates = compose_page(page, g, cfg.compose)
    labeled = assign_labels(candidates, page, cfg.zones, scorer)
    out = []
    for item in labeled:
        report = revalidate(item, g, cfg.max_edits)
        # an invalid ZIP is a hard rule: such a region is not an address
        if report.final_confidence <= 0.0:
            continue
        out.append(ExtractedAddress(item, report, normalize_address(item.candidate.components, g, cfg.max_edits)))
    return PageExtraction(page.page_number, tuple(out))


def extract_document(
    doc: Document,
    g: Gazetteer,
    cfg: PipelineConfig = PipelineConfig(),
    scorer: Optional[LabelScorer] = None,
) -> DocumentExtraction:
    """Run every stage except geocoding on one document."""
    pages = sorted(doc.pages, key=lambda p: p.page_number)
    return DocumentExtraction(doc.document_id, tuple(extract_page(p, g, cfg, scorer) for p in pages))


def attach_geocodes(results: Sequence[DocumentExtraction], backend) -> list[DocumentExtraction]:
    """Geocode every address of a corpus as one bounded batch."""
    flat = [a for r in results for a in r.addresses()]
    if backend is None:
        geos = [GeocodeResult(GeocodeStatus.SKIPPED)] * len(flat)
    else:
        geos = geocode_many([a.normalized for a in flat], backend)
    it = iter(geos)
    out = []
    for r in results:
        pages = tuple(
            replace(p, addresses=tuple(replace(a, geocode=next(it)) for a in p.addresses)) for p in r.pages
        )
        out.append(replace(r, pages=pages))
    return out


_worker_state: dict[str, Any] = {}


def _init_worker(g: Gazetteer, cfg: PipelineConfig) -> None:
    _worker_state["g"] = g
    _worker_state["cfg"] = cfg


def _extract_in_worker(doc: Document) -> DocumentExtraction:
    return extract_document(doc, _worker_state["g"], _worker_state["cfg"])


def extract_corpus(
    docs: Sequence[Document],
    g: Gazetteer,
    cfg: PipelineConfig = PipelineConfig(),
    parallelism: Optional[int] = None,
) -> list[DocumentExtraction]:
    """Extract and geocode many documents; results sorted by document id."""
    workers = parallelism or cfg.parallelism
    if workers <= 1 or len(docs) <= 1:
        results = [extract_document(d, g, cfg) for d in docs]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(g, cfg)) as pool:
            results = list(pool.map(_extract_in_worker, docs, chunksize=max(1, len(docs) // (4 * workers))))
    results.sort(key=lambda r: r.document_id)
    return attach_geocodes(results, cfg.backend(g))


def _round(x: float) -> float:
    return round(x, 6)


def address_record(a: ExtractedAddress) -> dict:
    cand = a.labeled.candidate
    geo = a.geocode or GeocodeResult(GeocodeStatus.SKIPPED)
    validation: dict[str, Any] = {
        "zip_valid": a.report.zip_valid,
        "zip_city": a.report.zip_city.kind.value,
        "complete": a.report.complete,
        "geocode": geo.status.value,
    }
    if geo.status is GeocodeStatus.MATCHED:
        validation["lat"] = geo.lat
        validation["lon"] = geo.lon
    return {
        "label": a.labeled.label.value,
        "confidence": _round(a.report.final_confidence),
        "label_score": _round(a.labeled.label_score),
        "bbox": cand.bbox.as_int_list(),
        "line_ids": list(cand.line_ids),
        "text": cand.text,
        "components": cand.components.to_dict(),
        "normalized": a.normalized.to_dict(),
        "validation": validation,
    }


def extraction_to_dict(r: DocumentExtraction) -> dict:
    return {
        "document_id": r.document_id,
        "pages": [
            {"page_number": p.page_number, "addresses": [address_record(a) for a in p.addresses]}
            for p in r.pages
        ],
    }


def dump_extraction(r: DocumentExtraction) -> str:
    return json.dumps(extraction_to_dict(r), ensure_ascii=False, indent=2) + "\n"


def output_path(out_dir: Path, document_id: str) -> Path:
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in document_id)
    return Path(out_dir) / f"{safe}.extract.json"
