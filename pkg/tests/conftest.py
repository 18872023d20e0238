from pathlib import Path

import pytest

from addrx.gazetteer import default_gazetteer_dir, load_gazetteer
from addrx.model import BoundingBox, Page, TextLine

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def gaz():
    return load_gazetteer(default_gazetteer_dir())


def write_gazetteer(directory: Path, zip_rows: str, **lists: str) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "zip_city.tsv").write_text(zip_rows, encoding="utf-8")
    defaults = {
        "first_names": "Max\nAnna\n",
        "org_keywords": "GmbH\nAG\n",
        "honorifics": "Herr\nFrau\n",
        "street_suffixes": "straße\nstr.\nweg\n",
    }
    defaults.update(lists)
    for name, body in defaults.items():
        (directory / f"{name}.txt").write_text(body, encoding="utf-8")
    return directory


@pytest.fixture
def leipzig_gaz(tmp_path):
    """Small registry: 04109 Leipzig (with a geo point), 01067 Dresden, 20095 Hamburg."""
    rows = "04109\tLeipzig\t51.339\t12.374\n01067\tDresden\n20095\tHamburg\n"
    return load_gazetteer(write_gazetteer(tmp_path / "gaz", rows))


def make_page(rows, width=2480, height=3508, number=1):
    """rows: (text, (x0, y0, x1, y1)) pairs; ids are l1, l2, ..."""
    lines = [TextLine(f"l{i + 1}", text, BoundingBox(*box)) for i, (text, box) in enumerate(rows)]
    return Page(number, width, height, 300, tuple(lines))


# Six-line letter: sender in the letterhead, receiver in the window, one footer address.
FIXTURE_LETTER = [
    ("Beispiel Handel GmbH", (1500, 100, 2000, 142)),
    ("04109 Leipzig", (1500, 156, 1820, 198)),
    ("Muster GmbH", (200, 640, 480, 682)),
    ("Musterstraße 12", (200, 696, 560, 738)),
    ("01067 Dresden", (200, 752, 520, 794)),
    ("20095 Hamburg", (200, 3200, 520, 3242)),
]


@pytest.fixture
def fixture_letter():
    return make_page(FIXTURE_LETTER)


# Published per-class counts (tp, fp, fn) and F1 values of the reference evaluation.
REFERENCE_COUNTS = {"sender": (39, 0, 27), "receiver": (57, 0, 13), "other": (41, 15, 64)}
REFERENCE_ALL = (137, 15, 104)
REFERENCE_F1 = {"sender": 0.7429, "receiver": 0.8976, "other": 0.5093, "all": 0.6972}


def reference_corpus():
    """(predictions, truths) whose page-by-page counts add up to REFERENCE_COUNTS.

    Every event sits on its own page of one document: a TP page carries a truth
    address and the matching prediction, an FN page only the truth, an FP page
    only a prediction without address content.
    """
    truth_pages, pred_pages = [], []

    def page(truth, preds):
        n = len(truth_pages) + 1
        truth_pages.append({"page_number": n, "addresses": truth})
        pred_pages.append({"page_number": n, "addresses": preds})

    gt = {"zip": "04109", "city": "Leipzig", "street": "Musterstraße", "house_number": "12"}
    for label, (tp, fp, fn) in REFERENCE_COUNTS.items():
        t = {"label": label, "components": gt}
        p = {"label": label, "confidence": 0.9, "text": "Muster GmbH Musterstraße 12 04109 Leipzig"}
        for _ in range(tp):
            page([t], [p])
        for _ in range(fn):
            page([t], [])
        for _ in range(fp):
            page([], [{"label": label, "confidence": 0.9, "text": "Zwischensumme 119,00 EUR"}])
    return ([{"document_id": "reference", "pages": pred_pages}],
            [{"document_id": "reference", "pages": truth_pages}])
