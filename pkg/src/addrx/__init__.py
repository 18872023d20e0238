"""Hybrid rule-based extraction of postal addresses from OCR'd German business letters."""

from .classify import LabeledAddress, LayoutZones, assign_labels, label_scores
from .compose import AddressCandidate, AddressComponents, ComposeConfig, compose_addresses, group_blocks
from .detect import ComponentKind, LineClass, classify_line, detect_components
from .estimator import AddressExtractor
from .evaluate import ClassCounts, EvalReport, count_page, evaluate_corpus, f1, matches_truth
from .gazetteer import (
    CityMatch,
    Gazetteer,
    MatchKind,
    default_gazetteer_dir,
    edit_distance,
    is_valid_zip,
    load_gazetteer,
    zip_city_match,
)
from .ingest import IngestError, parse_document, validate_document
from .model import AddressLabel, BoundingBox, Document, NormalizedRect, Page, TextLine
from .pipeline import PipelineConfig, extract_corpus, extract_document

__version__ = "0.1.0"
