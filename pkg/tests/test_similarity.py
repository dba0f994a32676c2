import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dedupkit.errors import ParamError
from dedupkit.similarity import (
    METRIC_NAMES,
    SmithWatermanParams,
    binary,
    damerau_levenshtein,
    jaro,
    jaro_winkler,
    levenshtein,
    levenshtein_distance,
    longest_common_substring,
    longest_common_substring_length,
    make_scorer,
    monge_elkan,
    ngram,
    osa_distance,
    similarity,
    smith_waterman,
)

import oracles

text = st.text(alphabet="abcAB 1é", max_size=12)
small = st.text(alphabet="abc", max_size=6)

SCORERS = {name: make_scorer(name) for name in METRIC_NAMES}


# --- hand-computed values ---------------------------------------------------


@pytest.mark.parametrize("fn,a,b,expected", [
    (jaro, "MARTHA", "MARHTA", 0.9444),
    (jaro, "abc", "abc", 1.0),
    (jaro, "abc", "xyz", 0.0),
    (jaro_winkler, "MARTHA", "MARHTA", 0.9611),
    (jaro_winkler, "abc", "xyz", 0.0),
    (smith_waterman, "AAA", "AAA", 1.0),
    (smith_waterman, "ABC", "XBY", 1 / 3),
    (smith_waterman, "AB", "AAB", 1.0),
    (levenshtein, "kitten", "sitting", 0.5714),
    (levenshtein, "", "abcd", 0.0),
    (damerau_levenshtein, "CA", "AC", 0.5),
    (damerau_levenshtein, "abcd", "badc", 0.5),
    (longest_common_substring, "ABAB", "BABA", 0.75),
    (longest_common_substring, "abc", "xyz", 0.0),
    (binary, "abc", "abd", 0.0),
    (binary, "", "", 1.0),
])
def test_known_values(fn, a, b, expected):
    assert fn(a, b) == pytest.approx(expected, abs=1e-4)


def test_ngram_counts_padded_bigrams():
    # padded bigrams: {#n,ni,ig,gh,ht} and {#n,na,ac,ch,ht}; shared #n and ht
    assert ngram("night", "nacht", 2) == pytest.approx(2 * 2 / (5 + 5))
    assert ngram("abc", "abc", 3) == 1.0
    assert ngram("", "abc", 2) == 0.0
    # a short string still has grams thanks to the padding
    assert ngram("a", "a b", 3) > 0.0


def test_monge_elkan_values():
    assert monge_elkan("pim verschuuren", "pim verschuren", "levenshtein") == pytest.approx(0.9545, abs=1e-4)
    assert monge_elkan("acme ltd", "acme ltd", "jaro") == 1.0
    assert monge_elkan("acme", "zzz qqq", "binary") == 0.0
    assert monge_elkan("", "   ") == 1.0
    assert monge_elkan("acme", "") == 0.0


def test_monge_elkan_is_symmetrised():
    a, b = "acme trading co", "acme"
    fwd = (1 + levenshtein("trading", "acme") + levenshtein("co", "acme")) / 3
    assert monge_elkan(a, b) == pytest.approx((fwd + 1.0) / 2)
    assert monge_elkan(a, b) == monge_elkan(b, a)


def test_smith_waterman_custom_weights():
    p = SmithWatermanParams(match_score=2, mismatch_penalty=-1, gap_penalty=-2)
    # best local alignment "AB" -> 4, normalised by 2 * min(3, 3)
    assert smith_waterman("ABX", "ABY", p) == pytest.approx(4 / 6)


# --- parameter validation ---------------------------------------------------


@pytest.mark.parametrize("metric,params", [
    ("jaro_winkler", {"prefix_weight": 0.3}),
    ("jaro_winkler", {"prefix_weight": -0.1}),
    ("ngram", {"n": 5}),
    ("ngram", {"n": 1}),
    ("smith_waterman", {"match_score": 0}),
    ("smith_waterman", {"gap_penalty": 1}),
    ("monge_elkan", {"inner": "soundex"}),
    ("levenshtein", {"n": 2}),
    ("no_such_metric", None),
])
def test_bad_parameters(metric, params):
    with pytest.raises(ParamError):
        make_scorer(metric, params)


def test_bad_parameters_direct_calls():
    with pytest.raises(ParamError):
        jaro_winkler("a", "b", prefix_weight=0.26)
    with pytest.raises(ParamError):
        ngram("a", "b", n=7)
    with pytest.raises(ParamError):
        monge_elkan("a", "b", inner="monge_elkan")


def test_similarity_dispatch():
    assert similarity("jaro", "MARTHA", "MARHTA") == jaro("MARTHA", "MARHTA")
    assert similarity("monge_elkan", "a b", "b a", {"inner": "jaro"}) == 1.0
    assert similarity("ngram", "abcd", "abce", {"n": 3}) == ngram("abcd", "abce", 3)


# --- properties ---------------------------------------------------------------


@settings(max_examples=300, deadline=None)
@given(a=text, b=text)
def test_axioms_hold_for_every_metric(a, b):
    for name, f in SCORERS.items():
        s = f(a, b)
        assert 0.0 <= s <= 1.0, name
        assert s == f(b, a), name
        assert f(a, a) == 1.0, name
    assert jaro_winkler(a, b) >= jaro(a, b)
    assert damerau_levenshtein(a, b) >= levenshtein(a, b)


@settings(max_examples=300, deadline=None)
@given(a=text, b=text)
def test_binary_one_implies_all_one(a, b):
    if binary(a, b) == 1.0:
        assert all(f(a, b) == 1.0 for f in SCORERS.values())


@settings(max_examples=300, deadline=None)
@given(a=text, b=text)
def test_jaro_matches_textbook_definition(a, b):
    assert jaro(a, b) == pytest.approx(oracles.naive_jaro(a, b), abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(a=text, b=text)
def test_lcs_matches_substring_enumeration(a, b):
    assert longest_common_substring_length(a, b) == oracles.lcs_by_enumeration(a, b)


@settings(max_examples=200, deadline=None)
@given(a=small, b=small)
def test_osa_matches_edit_script_search(a, b):
    assert osa_distance(a, b) == oracles.osa_by_scripts(a, b)


@settings(max_examples=200, deadline=None)
@given(a=text, b=text, c=text)
def test_levenshtein_triangle_inequality(a, b, c):
    assert levenshtein_distance(a, c) <= levenshtein_distance(a, b) + levenshtein_distance(b, c)


def test_edit_distances_against_bfs_up_to_length_five():
    alphabet, max_len = "abc", 5
    strings = oracles.all_strings(alphabet, max_len)
    for a in strings:
        # deleting before inserting keeps every intermediate string within
        # the longer endpoint, so the search space can stop at max_len
        lev = oracles.bfs_distances(a, alphabet, max_len)
        dl = oracles.bfs_distances(a, alphabet, max_len, swaps=True)
        for b in strings:
            d = levenshtein_distance(a, b)
            assert d == lev[b], (a, b)
            osa = osa_distance(a, b)
            # restricted transpositions sit between the two unrestricted searches
            assert dl[b] <= osa <= d, (a, b)
            m = max(len(a), len(b))
            if m:
                assert levenshtein(a, b) == 1 - d / m


def test_osa_differs_from_unrestricted_damerau():
    # "CA" -> "AC" -> "ABC" takes 2 unrestricted edits but OSA may not edit
    # the swapped pair again
    assert osa_distance("CA", "ABC") == 3
    assert oracles.bfs_distances("CA", "ABC", 4, swaps=True)["ABC"] == 2


def test_scores_are_plain_floats():
    for f in SCORERS.values():
        assert isinstance(f("abc", "abd"), float)
        assert math.isfinite(f("abc", "abd"))
