import pytest
from hypothesis import given
from hypothesis import strategies as st

from addrx.classify import LayoutZones, assign_labels, label_scores
from addrx.compose import AddressCandidate, AddressComponents, compose_page
from addrx.gazetteer import CityMatch, MatchKind
from addrx.model import AddressLabel, BoundingBox, NormalizedRect, Page

PAGE = Page(1, 1000, 1000)
COMPONENTS = AddressComponents(zip="04109", city="Leipzig")


def cand(box, confidence=1.0):
    return AddressCandidate(COMPONENTS, ("l1",), BoundingBox(*box), confidence, CityMatch(MatchKind.EXACT, "Leipzig"))


def test_receiver_zone_full():
    s, r = label_scores(cand((100, 200, 300, 300)), PAGE)
    assert r == pytest.approx(1.0)


def test_outside_all_zones():
    s, r = label_scores(cand((100, 800, 300, 900), 0.6), PAGE)
    assert s == pytest.approx(0.24) and r == pytest.approx(0.24)
    assert r < LayoutZones().label_threshold


def test_half_overlap_receiver():
    z = LayoutZones(receiver_zone=NormalizedRect(0.0, 0.0, 0.5, 1.0), sender_zone=NormalizedRect(0.9, 0.9, 1, 1),
                    letterhead_zone=NormalizedRect(0.9, 0.9, 1, 1))
    s, r = label_scores(cand((400, 400, 600, 500), 0.6), PAGE, z)
    assert r == pytest.approx(0.54)


def labels(out):
    return [l.label for l in out]


def test_receiver_and_letterhead():
    out = assign_labels([cand((100, 200, 300, 300)), cand((600, 10, 900, 100))], PAGE)
    assert labels(out) == [AddressLabel.RECEIVER, AddressLabel.SENDER]


def test_two_receiver_like_candidates():
    # scores 0.9 and 0.7: second loses receiver and falls back to sender evaluation
    scores = {0.9: (0.2, 0.9), 0.7: (0.5, 0.7)}
    a, b = cand((100, 200, 300, 300), 0.9), cand((100, 400, 300, 500), 0.7)
    out = assign_labels([a, b], PAGE, scorer=lambda c, p: scores[c.confidence])
    assert labels(out) == [AddressLabel.RECEIVER, AddressLabel.SENDER]
    scores[0.7] = (0.2, 0.7)
    out = assign_labels([a, b], PAGE, scorer=lambda c, p: scores[c.confidence])
    assert labels(out) == [AddressLabel.RECEIVER, AddressLabel.OTHER]


def test_all_below_threshold():
    out = assign_labels([cand((100, 800, 300, 900), 0.6)] * 3, PAGE)
    assert labels(out) == [AddressLabel.OTHER] * 3


def test_empty():
    assert assign_labels([], PAGE) == []


def test_fixture_letter_scores(fixture_letter, leipzig_gaz):
    cands = compose_page(fixture_letter, leipzig_gaz)
    assert [c.components.city for c in cands] == ["Leipzig", "Dresden", "Hamburg"]
    assert [c.confidence for c in cands] == pytest.approx([0.75, 1.0, 0.6])
    scores = [label_scores(c, fixture_letter) for c in cands]
    # sender fully inside the letterhead zone, receiver inside the window, footer outside every zone
    assert scores == [pytest.approx((0.9, 0.3)), pytest.approx((0.4, 1.0)), pytest.approx((0.24, 0.24))]
    out = assign_labels(cands, fixture_letter)
    assert labels(out) == [AddressLabel.SENDER, AddressLabel.RECEIVER, AddressLabel.OTHER]


score = st.floats(0, 1)
candidate_scores = st.lists(st.tuples(score, score, st.floats(0.5, 1)), max_size=6)


def scored(rows):
    cands = [cand((10 * i + 1, 10 * i + 1, 10 * i + 5, 10 * i + 5), conf) for i, (_, _, conf) in enumerate(rows)]
    table = {id(c): (s, r) for c, (s, r, _) in zip(cands, rows)}
    return cands, table


@given(candidate_scores)
def test_exclusivity_and_no_drops(rows):
    cands, table = scored(rows)
    out = assign_labels(cands, PAGE, scorer=lambda c, p: table[id(c)])
    assert [l.candidate for l in out] == cands
    assert labels(out).count(AddressLabel.SENDER) <= 1
    assert labels(out).count(AddressLabel.RECEIVER) <= 1
    for l in out:
        if l.label is not AddressLabel.OTHER:
            assert l.label_score >= LayoutZones().label_threshold


@given(candidate_scores, st.sampled_from([2.0, 4.0, 8.0, 1024.0]))
def test_scaling_invariance(rows, k):
    # powers of two scale exactly, so no ties appear from rounding
    cands, table = scored(rows)
    z = LayoutZones(label_threshold=0.0)
    base = assign_labels(cands, PAGE, z, scorer=lambda c, p: table[id(c)])
    scaled = assign_labels(cands, PAGE, z, scorer=lambda c, p: tuple(k * v for v in table[id(c)]))
    assert labels(base) == labels(scaled)


def test_zone_validation():
    with pytest.raises(ValueError):
        LayoutZones(alpha=0.7, beta=0.4)
    z = LayoutZones(receiver_zone=(0.1, 0.1, 0.5, 0.5))
    assert isinstance(z.receiver_zone, NormalizedRect)
