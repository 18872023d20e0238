import random
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from rapidfuzz.distance import DamerauLevenshtein

from addrx.gazetteer import (
    GazetteerError,
    MatchKind,
    edit_distance,
    fold,
    is_valid_zip,
    load_gazetteer,
    zip_city_match,
)

from conftest import write_gazetteer


def dl_oracle(a: str, b: str) -> int:
    """Full-matrix Damerau-Levenshtein (Lowrance-Wagner), written independently of the package."""
    alphabet = {c: 0 for c in a + b}
    inf = len(a) + len(b)
    d = [[inf] * (len(b) + 2) for _ in range(len(a) + 2)]
    for i in range(len(a) + 1):
        d[i + 1][0] = inf
        d[i + 1][1] = i
    for j in range(len(b) + 1):
        d[0][j + 1] = inf
        d[1][j + 1] = j
    for i in range(1, len(a) + 1):
        db = 0
        for j in range(1, len(b) + 1):
            k = alphabet[b[j - 1]]
            last = db
            cost = 0 if a[i - 1] == b[j - 1] else 1
            if cost == 0:
                db = j
            d[i + 1][j + 1] = min(
                d[i][j] + cost,
                d[i + 1][j] + 1,
                d[i][j + 1] + 1,
                d[k][last] + (i - k - 1) + 1 + (j - last - 1),
            )
        alphabet[a[i - 1]] = i
    return d[len(a) + 1][len(b) + 1]


def bfs_distance(a: str, b: str, alphabet: str) -> int:
    """Shortest edit path by breadth-first search over single-operation moves."""
    if a == b:
        return 0
    seen = {a}
    frontier = deque([(a, 0)])
    limit = max(len(a), len(b)) + 2
    while frontier:
        s, dist = frontier.popleft()
        nxt = set()
        for i in range(len(s) + 1):
            for c in alphabet:
                nxt.add(s[:i] + c + s[i:])
            if i < len(s):
                nxt.add(s[:i] + s[i + 1:])
                for c in alphabet:
                    nxt.add(s[:i] + c + s[i + 1:])
            if i + 1 < len(s):
                nxt.add(s[:i] + s[i + 1] + s[i] + s[i + 2:])
        for t in nxt:
            if t == b:
                return dist + 1
            if t not in seen and len(t) <= limit:
                seen.add(t)
                frontier.append((t, dist + 1))
    raise AssertionError("unreachable")


@pytest.fixture
def fixture_dir(tmp_path):
    return write_gazetteer(tmp_path / "g", "04109\tLeipzig\n")


def test_load_single_row(fixture_dir):
    g = load_gazetteer(fixture_dir)
    assert g.zip_to_cities == {"04109": frozenset({"Leipzig"})}
    assert "leipzig" in g.city_index
    assert g.org_keywords and g.honorifics and g.first_names and g.street_suffixes


def test_four_digit_zip_is_load_error(tmp_path):
    d = write_gazetteer(tmp_path / "g", "4109\tLeipzig\n")
    with pytest.raises(GazetteerError) as info:
        load_gazetteer(d)
    assert info.value.line == 1
    assert "zip_city.tsv" in str(info.value.path)


def test_trim_and_dedup(tmp_path):
    g = load_gazetteer(write_gazetteer(tmp_path / "g", "04109\tLeipzig\n04109\tLeipzig \n"))
    assert g.zip_to_cities["04109"] == frozenset({"Leipzig"})


@pytest.mark.parametrize(
    "rows, line",
    [
        ("04109\tLeipzig\n04109\n", 2),
        ("04109\tLeipzig\t51.3\n", 1),
        ("# header comment\n04109\tLeipzig\tx\ty\n", 2),
    ],
)
def test_malformed_rows(tmp_path, rows, line):
    with pytest.raises(GazetteerError) as info:
        load_gazetteer(write_gazetteer(tmp_path / "g", rows))
    assert info.value.line == line


def test_missing_and_empty_files(tmp_path):
    with pytest.raises(GazetteerError):
        load_gazetteer(tmp_path / "nope")
    d = write_gazetteer(tmp_path / "g", "04109\tLeipzig\n", honorifics="# nothing\n")
    with pytest.raises(GazetteerError):
        load_gazetteer(d)


def test_comments_and_geo(tmp_path):
    g = load_gazetteer(write_gazetteer(tmp_path / "g", "# c\n04109\tLeipzig\t51.339\t12.374\n"))
    assert g.geo_points == {("04109", "Leipzig"): (51.339, 12.374)}


def test_is_valid_zip(fixture_dir):
    g = load_gazetteer(fixture_dir)
    assert is_valid_zip(g, "04109")
    assert not is_valid_zip(g, "99999")
    assert not is_valid_zip(g, "0410")
    assert not is_valid_zip(g, "041090")


@given(st.text(max_size=7))
def test_valid_zip_implies_pattern(token):
    from addrx.gazetteer import load_gazetteer as _load, default_gazetteer_dir

    g = _load(default_gazetteer_dir())
    if is_valid_zip(g, token):
        assert len(token) == 5 and token.isascii() and token.isdigit()


@pytest.mark.parametrize(
    "a, b, d",
    [("Leipzig", "Leipzig", 0), ("Leipz1g", "Leipzig", 1), ("kitten", "sitting", 3), ("ab", "ba", 1),
     ("ca", "abc", 2), ("", "abc", 3), ("LEIPZIG", "leipzig", 0), ("Straße", "strasse", 0)],
)
def test_edit_distance_examples(a, b, d):
    assert edit_distance(a, b) == d


def test_kitten_sitting_matches_dp_oracle():
    assert dl_oracle("kitten", "sitting") == 3
    assert dl_oracle("ca", "abc") == 2


def test_fold():
    assert fold("  Strasse ") == "strasse"
    assert fold("Straße") == "strasse"
    assert fold("München") == fold("München")


def test_oracle_agreement_on_tiny_strings():
    rng = random.Random(7)
    for _ in range(300):
        a = "".join(rng.choice("ab") for _ in range(rng.randint(0, 4)))
        b = "".join(rng.choice("ab") for _ in range(rng.randint(0, 4)))
        expected = bfs_distance(a, b, "ab")
        assert dl_oracle(a, b) == expected
        assert edit_distance(a, b) == expected


def random_pairs(n, seed=2024):
    rng = random.Random(seed)
    alphabet = "abcdeAB"
    for _ in range(n):
        yield tuple("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12))) for _ in range(3))


def test_metric_axioms_against_oracles():
    for a, b, c in random_pairs(10_000):
        fa, fb = fold(a), fold(b)
        dab = edit_distance(a, b)
        assert dab == dl_oracle(fa, fb) == DamerauLevenshtein.distance(fa, fb)
        assert edit_distance(a, a) == 0
        assert dab == edit_distance(b, a)
        assert edit_distance(a, c) <= dab + edit_distance(b, c)


@settings(max_examples=200)
@given(st.text(max_size=10), st.text(max_size=10))
def test_unicode_pairs_against_oracle(a, b):
    assert edit_distance(a, b) == dl_oracle(fold(a), fold(b))


def test_zip_city_match_examples(fixture_dir):
    g = load_gazetteer(fixture_dir)
    m = zip_city_match(g, "04109", "Leipzig", 1)
    assert (m.kind, m.matched_city) == (MatchKind.EXACT, "Leipzig")
    m = zip_city_match(g, "04109", "Leipz1g", 1)
    assert (m.kind, m.matched_city, m.distance) == (MatchKind.FUZZY, "Leipzig", 1)
    # brute force: the closest registry city for 04109 is further than one edit from Dresden
    assert min(edit_distance("Dresden", c) for c in g.zip_to_cities["04109"]) > 1
    assert zip_city_match(g, "04109", "Dresden", 1).kind is MatchKind.MISMATCH
    assert zip_city_match(g, "99999", "Leipzig", 1).kind is MatchKind.UNKNOWN_ZIP


def test_zip_city_match_multi_city_zip(gaz):
    assert zip_city_match(gaz, "01723", "Kesselsdorf").matched_city == "Kesselsdorf"
    assert zip_city_match(gaz, "01723", "Wilsdruff").kind is MatchKind.EXACT


@given(st.text(alphabet="LeipzgDrsdnab1 ", max_size=10))
def test_no_fuzzy_at_zero_edits(city):
    from addrx.gazetteer import default_gazetteer_dir

    g = load_gazetteer(default_gazetteer_dir())
    assert zip_city_match(g, "04109", city, 0).kind is not MatchKind.FUZZY


def test_find_city_matches_brute_force(gaz):
    rng = random.Random(3)
    cities = sorted({c for cs in gaz.zip_to_cities.values() for c in cs})
    for _ in range(300):
        base = rng.choice(cities)
        chars = list(base)
        i = rng.randrange(len(chars))
        chars[i] = rng.choice("xyzäß")
        query = "".join(chars)
        best = min(edit_distance(query, c) for c in cities)
        found = gaz.find_city(query, 2)
        if best <= 2 and len(fold(query)) >= 4:
            assert found is not None and found[1] == best
            assert edit_distance(query, found[0]) == best
        elif best > 2:
            assert found is None
