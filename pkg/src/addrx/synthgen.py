"""Seeded generator of synthetic German business letters with ground truth.

Each letter is one A4 page at 300 dpi, rendered as OCR lines (text plus
pixel boxes) into template slots: a letterhead holding the sender, the
address window holding the receiver, a body, and footer columns that may
hold further addresses. Randomness is keyed on (seed, letter, line, char)
so every byte of output is reproducible regardless of generation order.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

from .gazetteer import Gazetteer
from .ingest import dump_document
from .model import AddressLabel, BoundingBox, Document, NormalizedRect, Page, TextLine, bbox_union

PAGE_W, PAGE_H, PAGE_DPI = 2480, 3508, 300
LINE_H = 42
LINE_GAP = 14
CHAR_W = 24

CONFUSIONS = {"0": "O", "O": "0", "1": "l", "l": "1", "5": "S", "S": "5", "8": "B", "B": "8"}

SURNAMES = (
    "Bauer", "Becker", "Braun", "Fischer", "Hartmann", "Hoffmann", "Keller", "Klein", "Koch",
    "Krüger", "Lange", "Lehmann", "Meyer", "Neumann", "Richter", "Schmidt", "Schneider",
    "Schulz", "Schwarz", "Wagner", "Weber", "Werner", "Wolf", "Zimmermann",
)
TRADES = (
    "Logistik", "Handel", "Bau", "Elektro", "Maschinenbau", "Druck", "Medien", "Consulting",
    "Metallbau", "Haustechnik", "Software", "Versand",
)
LEGAL_FORMS = ("GmbH", "AG", "KG", "GbR", "OHG", "e.V.")
STREET_STEMS = (
    "Haupt", "Bahnhof", "Garten", "Schul", "Kirch", "Linden", "Berg", "Wiesen", "Mühlen",
    "Goethe", "Schiller", "Eichen", "Birken", "Rosen", "Industrie", "Markt", "Wald", "Feld",
)
BRANCH_LABELS = ("Niederlassung", "Lager und Versand", "Zweigstelle", "Service-Center", "Werk")


@dataclass(frozen=True)
class NoiseModel:
    char_sub_prob: float = 0.0
    line_drop_prob: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("char_sub_prob", "line_drop_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"char_sub_prob": self.char_sub_prob, "line_drop_prob": self.line_drop_prob, "seed": self.seed}


@dataclass(frozen=True)
class LetterTemplate:
    name: str
    letterhead: NormalizedRect
    window: NormalizedRect
    body: NormalizedRect
    footers: tuple[tuple[NormalizedRect, str], ...] = field(default_factory=tuple)


def _r(*v: float) -> NormalizedRect:
    return NormalizedRect(*v)


DEFAULT_TEMPLATES: tuple[LetterTemplate, ...] = (
    LetterTemplate(
        "letterhead-right",
        letterhead=_r(0.60, 0.025, 0.97, 0.115),
        window=_r(0.08, 0.18, 0.50, 0.30),
        body=_r(0.08, 0.34, 0.92, 0.82),
        footers=(
            (_r(0.05, 0.90, 0.33, 0.97), "address"),
            (_r(0.37, 0.90, 0.65, 0.97), "legal"),
            (_r(0.69, 0.90, 0.97, 0.97), "bank"),
        ),
    ),
    LetterTemplate(
        "letterhead-left",
        letterhead=_r(0.08, 0.085, 0.50, 0.155),
        window=_r(0.08, 0.18, 0.50, 0.30),
        body=_r(0.08, 0.34, 0.92, 0.82),
        footers=(
            (_r(0.05, 0.90, 0.33, 0.97), "address"),
            (_r(0.37, 0.90, 0.65, 0.97), "address"),
            (_r(0.69, 0.90, 0.97, 0.97), "bank"),
        ),
    ),
    LetterTemplate(
        "two-branches",
        letterhead=_r(0.60, 0.025, 0.97, 0.115),
        window=_r(0.08, 0.19, 0.50, 0.31),
        body=_r(0.08, 0.35, 0.92, 0.82),
        footers=(
            (_r(0.05, 0.90, 0.33, 0.97), "address"),
            (_r(0.37, 0.90, 0.65, 0.97), "address"),
            (_r(0.69, 0.90, 0.97, 0.97), "legal"),
        ),
    ),
)


def keyed_rng(seed: int, *keys) -> random.Random:
    """Independent generator for one position in the corpus."""
    digest = hashlib.blake2b(repr((seed,) + keys).encode("utf-8"), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def substitute_at(text: str, index: int, u: float = 0.0) -> tuple[str, int]:
    """OCR-style replacement for ``text[index]``; returns (replacement, chars consumed).

    ``u`` in [0, 1) picks the random replacement when no confusion partner exists.
    """
    ch = text[index]
    if ch == "r" and text[index + 1 : index + 2] == "n":
        return "m", 2
    if ch in CONFUSIONS:
        return CONFUSIONS[ch], 1
    if ch.isdigit():
        pool = string.digits
    elif ch.isupper():
        pool = string.ascii_uppercase
    else:
        pool = string.ascii_lowercase
    pool = pool.replace(ch, "")
    return pool[int(u * len(pool)) % len(pool)], 1


def apply_noise(text: str, noise: NoiseModel, doc_index: int = 0, line_index: int = 0) -> str:
    """Substitute letters and digits independently with probability ``char_sub_prob``.

    Spaces and punctuation are left alone.
    """
    if noise.char_sub_prob <= 0.0 or not text:
        return text
    rng = keyed_rng(noise.seed, "noise", doc_index, line_index)
    draws = [(rng.random(), rng.random()) for _ in text]
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        hit, u = draws[i]
        if ch.isalnum() and hit < noise.char_sub_prob:
            rep, used = substitute_at(text, i, u)
            out.append(rep)
            i += used
        else:
            out.append(ch)
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class _Address:
    label: AddressLabel
    lines: tuple[str, ...]
    components: dict
    # index of the first line belonging to the address region proper
    first_line: int = 0


def _org(rng: random.Random) -> str:
    return f"{rng.choice(SURNAMES)} {rng.choice(TRADES)} {rng.choice(LEGAL_FORMS)}"


def _person(rng: random.Random, g: Gazetteer) -> str:
    first = rng.choice(sorted(g.first_names))
    last = rng.choice(SURNAMES)
    style = rng.random()
    if style < 0.4:
        return f"{rng.choice(('Herr', 'Frau'))} {first} {last}"
    if style < 0.55:
        return f"{rng.choice(('Herr', 'Frau'))} Dr. {first} {last}"
    return f"{first} {last}"


def _street(rng: random.Random, g: Gazetteer) -> tuple[str, str]:
    suffixes = sorted(s for s in g.street_suffixes if s.isalpha() or s.endswith("."))
    suffix = rng.choice(suffixes)
    street = rng.choice(STREET_STEMS) + suffix
    house = str(rng.randint(1, 150))
    if rng.random() < 0.15:
        house += rng.choice("abc")
    return street, house


def _zip_city(rng: random.Random, pairs: Sequence[tuple[str, str]]) -> tuple[str, str]:
    return rng.choice(pairs)


def _registry_pairs(g: Gazetteer) -> list[tuple[str, str]]:
    return [(z, c) for z, cities in sorted(g.zip_to_cities.items()) for c in sorted(cities)]


def _make_addresses(rng: random.Random, g: Gazetteer, template: LetterTemplate):
    pairs = _registry_pairs(g)

    sender_org = _org(rng)
    street, house = _street(rng, g)
    zip_code, city = _zip_city(rng, pairs)
    sender = _Address(
        AddressLabel.SENDER,
        (sender_org, f"{street} {house}", f"{zip_code} {city}"),
        {"addressee": sender_org, "street": street, "house_number": house, "zip": zip_code, "city": city},
    )

    addressee = _org(rng) if rng.random() < 0.5 else _person(rng, g)
    zip_code, city = _zip_city(rng, pairs)
    if rng.random() < 0.15:
        box = f"{rng.randint(10, 99)} {rng.randint(10, 99)} {rng.randint(10, 99)}"
        receiver = _Address(
            AddressLabel.RECEIVER,
            (addressee, f"Postfach {box}", f"{zip_code} {city}"),
            {"addressee": addressee, "zip": zip_code, "city": city},
        )
    else:
        street, house = _street(rng, g)
        receiver = _Address(
            AddressLabel.RECEIVER,
            (addressee, f"{street} {house}", f"{zip_code} {city}"),
            {"addressee": addressee, "street": street, "house_number": house, "zip": zip_code, "city": city},
        )

    others = []
    for _rect, role in template.footers:
        if role != "address":
            others.append(None)
            continue
        street, house = _street(rng, g)
        zip_code, city = _zip_city(rng, pairs)
        others.append(
            _Address(
                AddressLabel.OTHER,
                (rng.choice(BRANCH_LABELS), f"{street} {house}", f"{zip_code} {city}"),
                {"street": street, "house_number": house, "zip": zip_code, "city": city},
                first_line=1,
            )
        )
    return sender, receiver, others, sender_org


def _body_lines(rng: random.Random, sender_city: str, sender_org: str) -> list[str]:
    qty = rng.randint(1, 40)
    price = rng.randint(10, 900)
    net = qty * price
    vat = net * 19
    return [
        f"{sender_city}, {rng.randint(1, 28):02d}.{rng.randint(1, 12):02d}.{rng.randint(2019, 2024)}",
        f"Rechnung Nr. {rng.randint(100000, 999999)}",
        "Sehr geehrte Damen und Herren,",
        "für die erbrachten Leistungen berechnen wir Ihnen:",
        "Pos. Menge Bezeichnung Einzelpreis Gesamt",
        f"1 {qty} Stück Artikel {rng.randint(1000, 9999)} {price},00 EUR",
        f"Zwischensumme {net},00 EUR",
        f"zzgl. 19% MwSt. {vat // 100},{vat % 100:02d} EUR",
        "Bitte überweisen Sie den Betrag innerhalb von 14 Tagen.",
        "Mit freundlichen Grüßen",
        sender_org,
    ]


def _footer_lines(rng: random.Random, role: str, g: Gazetteer, city: str) -> list[str]:
    if role == "legal":
        first = rng.choice(sorted(g.first_names))
        return [
            f"Geschäftsführer: {first} {rng.choice(SURNAMES)}",
            f"Amtsgericht {city} HRB {rng.randint(100000, 999999)}",
            f"USt-IdNr. DE{rng.randint(100000000, 999999999)}",
        ]
    digits = "".join(str(rng.randint(0, 9)) for _ in range(20))
    iban = "DE" + " ".join(digits[i : i + 4] for i in range(0, 20, 4))
    return [f"Sparkasse {city}", f"IBAN {iban}", f"BIC {''.join(rng.choice(string.ascii_uppercase) for _ in range(8))}"]


def _render(texts: Sequence[str], slot: NormalizedRect, y_step: int = LINE_H + LINE_GAP) -> list[BoundingBox]:
    x0 = round(slot.x0 * PAGE_W)
    x_max = round(slot.x1 * PAGE_W)
    y = round(slot.y0 * PAGE_H)
    boxes = []
    for text in texts:
        width = max(CHAR_W, len(text) * CHAR_W)
        boxes.append(BoundingBox(x0, y, min(x0 + width, x_max), y + LINE_H))
        y += y_step
    return boxes


def generate_letter(
    index: int,
    g: Gazetteer,
    noise: NoiseModel = NoiseModel(),
    templates: Sequence[LetterTemplate] = DEFAULT_TEMPLATES,
) -> tuple[Document, dict]:
    """One letter as an OCR-lines document plus its ground-truth record."""
    if not g.zip_to_cities:
        raise ValueError("gazetteer has no ZIP/city pairs")
    rng = keyed_rng(noise.seed, "letter", index)
    template = rng.choice(templates)
    sender, receiver, others, sender_org = _make_addresses(rng, g, template)

    # (clean text, box, address or None, line index within address)
    rows: list[tuple[str, BoundingBox, Optional[_Address], int]] = []

    def place(texts, slot, addr=None, step=LINE_H + LINE_GAP):
        for k, (text, box) in enumerate(zip(texts, _render(texts, slot, step))):
            rows.append((text, box, addr, k))

    place(sender.lines, template.letterhead, sender)
    place(receiver.lines, template.window, receiver)
    place(_body_lines(rng, sender.components["city"], sender_org), template.body, step=LINE_H + 3 * LINE_GAP)
    for (slot, role), addr in zip(template.footers, others):
        if addr is not None:
            place(addr.lines, slot, addr)
        else:
            place(_footer_lines(rng, role, g, sender.components["city"]), slot)

    lines = []
    region_boxes: dict[int, list[BoundingBox]] = {}
    for li, (text, box, addr, k) in enumerate(rows):
        if addr is not None and k >= addr.first_line:
            region_boxes.setdefault(id(addr), []).append(box)
        if noise.line_drop_prob > 0 and keyed_rng(noise.seed, "drop", index, li).random() < noise.line_drop_prob:
            continue
        noisy = apply_noise(text, noise, index, li)
        lines.append(TextLine(f"l{li + 1}", noisy, box, 1.0 if noisy == text else 0.9))

    doc_id = f"letter_{index:04d}"
    doc = Document(doc_id, (Page(1, PAGE_W, PAGE_H, PAGE_DPI, tuple(lines)),))
    truth_addresses = []
    for addr in [sender, receiver, *[o for o in others if o is not None]]:
        truth_addresses.append(
            {
                "label": addr.label.value,
                "components": dict(addr.components),
                "bbox": bbox_union(region_boxes[id(addr)]).as_int_list(),
            }
        )
    truth = {
        "document_id": doc_id,
        "template": template.name,
        "pages": [{"page_number": 1, "addresses": truth_addresses}],
    }
    return doc, truth


def generate_letters(
    n: int,
    g: Gazetteer,
    noise: NoiseModel = NoiseModel(),
    templates: Sequence[LetterTemplate] = DEFAULT_TEMPLATES,
) -> Iterator[tuple[Document, dict]]:
    for i in range(n):
        yield generate_letter(i, g, noise, templates)


def _dump_json(data: dict) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


def generate_corpus(
    n: int,
    g: Gazetteer,
    noise: NoiseModel,
    out_dir: str | os.PathLike,
    templates: Sequence[LetterTemplate] = DEFAULT_TEMPLATES,
) -> Path:
    """Write ``n`` paired OCR/truth files and, last, ``manifest.json``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for doc, truth in generate_letters(n, g, noise, templates):
        ocr_name = f"{doc.document_id}.ocr.json"
        truth_name = f"{doc.document_id}.truth.json"
        (out / ocr_name).write_text(dump_document(doc), encoding="utf-8")
        (out / truth_name).write_text(_dump_json(truth), encoding="utf-8")
        entries.append(
            {"ocr_file": ocr_name, "truth_file": truth_name, "seed": noise.seed, "noise": noise.to_dict()}
        )
    manifest = out / "manifest.json"
    manifest.write_text(_dump_json({"count": n, "letters": entries}), encoding="utf-8")
    return manifest
