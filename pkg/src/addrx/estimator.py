"""scikit-learn style wrapper around the extraction pipeline."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Iterable, Optional

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .classify import LabelScorer, LayoutZones
from .compose import ComposeConfig
from .evaluate import evaluate_corpus, f1
from .gazetteer import Gazetteer, default_gazetteer_dir, load_gazetteer
from .ingest import document_from_dict, parse_document, read_document
from .model import Document
from .pipeline import (
    DocumentExtraction,
    GeocodeConfig,
    PipelineConfig,
    attach_geocodes,
    extract_document,
    extraction_to_dict,
)


def check_document(x: Any) -> Document:
    """Coerce a Document, decoded JSON dict, raw bytes or file path into a Document."""
    if isinstance(x, Document):
        return x
    if isinstance(x, dict):
        return document_from_dict(x)
    if isinstance(x, (bytes, bytearray)):
        return parse_document(bytes(x))
    if isinstance(x, (str, os.PathLike)):
        return read_document(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as an OCR-lines document")


def check_documents(X: Iterable[Any]) -> list[Document]:
    if isinstance(X, (Document, dict, str, bytes, os.PathLike)):
        X = [X]
    return [check_document(x) for x in X]


class AddressExtractor(BaseEstimator):
    """Rule-based address extraction behind the fit/predict/transform API.

    ``fit`` only loads the reference lists; there is nothing to learn.
    ``predict`` returns one :class:`DocumentExtraction` per input document and
    ``transform`` the same as JSON-ready dicts. ``score`` is the pooled F1 over
    all address classes against ground-truth records.
    """

    def __init__(
        self,
        gazetteer_dir: Optional[str] = None,
        max_edits: int = 1,
        compose: Optional[ComposeConfig] = None,
        zones: Optional[LayoutZones] = None,
        geocode: str = "offline",
        scorer: Optional[LabelScorer] = None,
    ):
        self.gazetteer_dir = gazetteer_dir
        self.max_edits = max_edits
        self.compose = compose
        self.zones = zones
        self.geocode = geocode
        self.scorer = scorer

    def fit(self, X=None, y=None):
        directory = self.gazetteer_dir or default_gazetteer_dir()
        self.gazetteer_: Gazetteer = load_gazetteer(Path(directory))
        self.config_ = PipelineConfig(
            gazetteer_dir=str(directory),
            max_edits=self.max_edits,
            compose=self.compose or ComposeConfig(),
            zones=self.zones or LayoutZones(),
            geocode=GeocodeConfig(backend=self.geocode),
            parallelism=1,
        )
        return self

    def predict(self, X) -> list[DocumentExtraction]:
        check_is_fitted(self, "gazetteer_")
        docs = check_documents(X)
        results = [extract_document(d, self.gazetteer_, self.config_, self.scorer) for d in docs]
        return attach_geocodes(results, self.config_.backend(self.gazetteer_))

    def transform(self, X) -> list[dict]:
        return [extraction_to_dict(r) for r in self.predict(X)]

    def fit_transform(self, X, y=None) -> list[dict]:
        return self.fit(X, y).transform(X)

    def score(self, X, y) -> float:
        report = evaluate_corpus(self.transform(X), list(y))
        return f1(report.all)
