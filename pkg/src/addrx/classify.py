"""Sender / receiver / other labelling from layout priors and text confidence.

The default scorer stands in for a learned region detector: it rewards
candidates lying in the usual DIN 5008 positions of a German business
letter. Any callable with the :class:`LabelScorer` signature can replace it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .compose import AddressCandidate
from .model import AddressLabel, NormalizedRect, Page, normalize_bbox, zone_overlap

LabelScorer = Callable[[AddressCandidate, Page], "tuple[float, float]"]


@dataclass(frozen=True)
class LayoutZones:
    receiver_zone: NormalizedRect = field(default_factory=lambda: NormalizedRect(0.03, 0.12, 0.55, 0.35))
    sender_zone: NormalizedRect = field(default_factory=lambda: NormalizedRect(0.03, 0.08, 0.55, 0.16))
    letterhead_zone: NormalizedRect = field(default_factory=lambda: NormalizedRect(0.45, 0.00, 1.00, 0.12))
    alpha: float = 0.6
    beta: float = 0.4
    label_threshold: float = 0.35

    def __post_init__(self) -> None:
        for name in ("receiver_zone", "sender_zone", "letterhead_zone"):
            value = getattr(self, name)
            if not isinstance(value, NormalizedRect):
                object.__setattr__(self, name, NormalizedRect(*value))
        if self.alpha < 0 or self.beta < 0 or abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValueError("alpha and beta must be non-negative and sum to 1")
        if not 0.0 <= self.label_threshold <= 1.0:
            raise ValueError("label_threshold must lie in [0, 1]")


@dataclass(frozen=True)
class LabeledAddress:
    candidate: AddressCandidate
    label: AddressLabel
    label_score: float


def label_scores(c: AddressCandidate, page: Page, z: LayoutZones = LayoutZones()) -> tuple[float, float]:
    """``(sender_score, receiver_score)`` for one candidate."""
    rect = normalize_bbox(c.bbox, page)
    text_part = z.beta * c.confidence
    receiver = z.alpha * zone_overlap(rect, z.receiver_zone) + text_part
    sender = z.alpha * max(zone_overlap(rect, z.sender_zone), zone_overlap(rect, z.letterhead_zone)) + text_part
    return sender, receiver


def assign_labels(
    candidates: Sequence[AddressCandidate],
    page: Page,
    z: LayoutZones = LayoutZones(),
    scorer: Optional[LabelScorer] = None,
) -> list[LabeledAddress]:
    """Label every candidate; at most one receiver and one sender per page.

    Output keeps the input order.
    """
    if scorer is None:
        scores = [label_scores(c, page, z) for c in candidates]
    else:
        scores = [tuple(scorer(c, page)) for c in candidates]

    def pick(slot: int, taken: set[int]) -> Optional[int]:
        eligible = [
            i for i in range(len(candidates)) if i not in taken and scores[i][slot] >= z.label_threshold
        ]
        if not eligible:
            return None
        return min(
            eligible,
            key=lambda i: (
                -scores[i][slot],
                -candidates[i].confidence,
                candidates[i].bbox.y0,
                candidates[i].bbox.x0,
                i,
            ),
        )

    labels = {}
    receiver = pick(1, set())
    if receiver is not None:
        labels[receiver] = AddressLabel.RECEIVER
    sender = pick(0, set(labels))
    if sender is not None:
        labels[sender] = AddressLabel.SENDER

    out = []
    for i, cand in enumerate(candidates):
        label = labels.get(i, AddressLabel.OTHER)
        if label is AddressLabel.RECEIVER:
            score = scores[i][1]
        elif label is AddressLabel.SENDER:
            score = scores[i][0]
        else:
            score = max(scores[i])
        out.append(LabeledAddress(cand, label, min(1.0, max(0.0, score))))
    return out
