import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addrx.compose import (
    AddressComponents,
    ComposeConfig,
    compose_addresses,
    compose_page,
    group_blocks,
    score_candidate,
    split_street_house,
)
from addrx.gazetteer import CityMatch, MatchKind
from addrx.model import BoundingBox, TextLine, bbox_union

from conftest import make_page

EXACT = CityMatch(MatchKind.EXACT, "Leipzig")
MISMATCH = CityMatch(MatchKind.MISMATCH, None)
FULL = AddressComponents("Muster GmbH", "Musterstraße", "12", None, "04109", "Leipzig")


def stack(texts, x=200, y=100, h=40, gap=5):
    return [(t, (x, y + i * (h + gap), x + 400, y + i * (h + gap) + h)) for i, t in enumerate(texts)]


def test_one_block_of_three():
    assert group_blocks(make_page(stack(["a", "b", "c"]))) == [[0, 1, 2]]


def test_far_apart_stacks_split():
    rows = stack(["a", "b"]) + stack(["c", "d"], y=100 + 85 + 500)
    assert group_blocks(make_page(rows)) == [[0, 1], [2, 3]]


def test_columns_split():
    rows = stack(["a", "b"], x=100) + stack(["c", "d"], x=1500)
    assert group_blocks(make_page(rows)) == [[0, 1], [2, 3]]


def test_interleaved_columns_still_grouped_per_column():
    # left and right columns share y positions; each stays one block
    rows = []
    for i in range(3):
        y = 100 + i * 50
        rows.append((f"L{i}", (100, y, 500, y + 40)))
        rows.append((f"R{i}", (1500, y, 1900, y + 40)))
    assert group_blocks(make_page(rows)) == [[0, 2, 4], [1, 3, 5]]


def test_long_block_split_at_largest_gap():
    rows = stack([str(i) for i in range(5)]) + stack([str(i) for i in range(5)], y=100 + 5 * 45 + 30)
    blocks = group_blocks(make_page(rows), ComposeConfig(max_block_lines=8))
    assert blocks == [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]]


def test_empty_page():
    assert group_blocks(make_page([])) == []


@st.composite
def pages(draw):
    n = draw(st.integers(0, 14))
    rows = []
    for i in range(n):
        x = draw(st.integers(0, 2000))
        y = draw(st.integers(0, 3300))
        rows.append((f"t{i}", (x, y, x + draw(st.integers(10, 450)), y + draw(st.integers(20, 60)))))
    return make_page(rows)


@settings(max_examples=200)
@given(pages(), st.integers(1, 8))
def test_blocks_partition_lines(page, limit):
    blocks = group_blocks(page, ComposeConfig(max_block_lines=limit))
    flat = [i for b in blocks for i in b]
    assert sorted(flat) == list(range(len(page.lines)))
    for b in blocks:
        assert 1 <= len(b) <= limit
        ys = [(page.lines[i].bbox.y0, page.lines[i].bbox.x0) for i in b]
        assert ys == sorted(ys)


def block(texts):
    return [TextLine(f"l{i + 1}", t, BoundingBox(200, 100 + 56 * i, 700, 142 + 56 * i)) for i, t in enumerate(texts)]


def test_full_block(leipzig_gaz):
    lines = block(["Muster GmbH", "Musterstraße 12", "04109 Leipzig"])
    [c] = compose_addresses(lines, leipzig_gaz)
    assert c.components == FULL
    assert c.zip_city.kind is MatchKind.EXACT
    assert c.line_ids == ("l1", "l2", "l3")
    assert c.bbox == bbox_union(l.bbox for l in lines)
    assert c.confidence == 1.0


def test_zip_city_alone(leipzig_gaz):
    [c] = compose_addresses(block(["04109 Leipzig"]), leipzig_gaz)
    assert c.components == AddressComponents(zip="04109", city="Leipzig")
    assert c.confidence == pytest.approx(0.60)


def test_invalid_zip_yields_nothing(leipzig_gaz):
    assert compose_addresses(block(["Muster GmbH", "Musterstraße 12", "12345 Nirgendstadt"]), leipzig_gaz) == []


def test_mismatched_pair_still_above_threshold(leipzig_gaz):
    [c] = compose_addresses(block(["Muster GmbH", "Musterstraße 12", "04109 Dresden"]), leipzig_gaz)
    assert c.zip_city.kind is MatchKind.MISMATCH
    assert c.confidence == pytest.approx(0.70)


def test_po_box_and_country(gaz):
    [c] = compose_addresses(block(["Anna Schmidt", "Postfach 10 02 03", "04109 Leipzig", "Deutschland"]), gaz)
    assert c.components == AddressComponents(
        addressee="Anna Schmidt", po_box="10 02 03", zip="04109", city="Leipzig", country="Deutschland"
    )
    assert c.line_ids == ("l1", "l2", "l3", "l4")


def test_two_anchors_in_one_block(leipzig_gaz):
    lines = block(["Musterstraße 12", "04109 Leipzig", "Musterweg 3", "01067 Dresden"])
    cands = compose_addresses(lines, leipzig_gaz)
    assert [c.line_ids for c in cands] == [("l1", "l2"), ("l3", "l4")]


def test_compose_page_order(leipzig_gaz):
    rows = stack(["01067 Dresden"], x=1500, y=100) + stack(["04109 Leipzig"], x=200, y=100)
    cands = compose_page(make_page(rows), leipzig_gaz)
    assert [c.components.city for c in cands] == ["Leipzig", "Dresden"]


def test_split_street_house():
    assert split_street_house("Musterstraße  12a") == ("Musterstraße", "12a")
    assert split_street_house("Am Markt 3") == ("Am Markt", "3")


@pytest.mark.parametrize(
    "components, match, expected",
    [
        (FULL, EXACT, 1.00),
        (AddressComponents(zip="04109", city="Leipzig"), EXACT, 0.60),
        (FULL, MISMATCH, 0.70),
        (AddressComponents(zip="04109"), CityMatch(MatchKind.UNKNOWN_ZIP, None), 0.30),
    ],
)
def test_score_examples(components, match, expected):
    assert score_candidate(components, match) == pytest.approx(expected)


OPTIONAL = st.one_of(st.none(), st.just("x"))


@given(OPTIONAL, OPTIONAL, OPTIONAL, OPTIONAL, OPTIONAL, st.sampled_from(list(MatchKind)),
       st.sampled_from(["addressee", "street", "zip", "city"]))
def test_adding_component_never_lowers_score(addressee, street, house, zip_, city, kind, missing):
    base = AddressComponents(addressee=addressee, street=street, house_number=house, zip=zip_, city=city)
    match = CityMatch(kind, None)
    fuller = AddressComponents(**{**base.__dict__, missing: "y", "house_number": house or "1"}) \
        if missing == "street" else AddressComponents(**{**base.__dict__, missing: "y"})
    assert score_candidate(fuller, match) >= score_candidate(base, match)


@given(OPTIONAL, OPTIONAL, OPTIONAL)
def test_exact_to_mismatch_drops_by_030(addressee, street, house):
    # keep the raw sum inside [0, 1] so clipping does not interfere
    c = AddressComponents(addressee=addressee, street=street, house_number=house, zip="04109", city="Leipzig")
    cfg = ComposeConfig(w_addressee=0.05, w_street=0.10)
    diff = score_candidate(c, EXACT, cfg) - score_candidate(c, MISMATCH, cfg)
    assert diff == pytest.approx(0.30)


def test_candidates_on_corpus_have_zip_city_and_union_bbox(gaz):
    from addrx.synthgen import NoiseModel, generate_letters

    for doc, _ in generate_letters(30, gaz, NoiseModel(0.03, 0.05, 5)):
        page = doc.pages[0]
        by_id = {l.id: l for l in page.lines}
        ids = [l.id for l in page.lines]
        for c in compose_page(page, gaz):
            assert c.components.zip and c.components.city
            assert c.bbox == bbox_union(by_id[i].bbox for i in c.line_ids)
            assert 0.0 <= c.confidence <= 1.0
            positions = [ids.index(i) for i in c.line_ids]
            assert positions == sorted(positions)


def test_config_validation():
    with pytest.raises(ValueError):
        ComposeConfig(w_zip=-0.1)
    with pytest.raises(ValueError):
        ComposeConfig(accept_threshold=0)
    with pytest.raises(ValueError):
        AddressComponents(street="a", po_box="1")
