from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dedupkit.blocking import (
    Block,
    BlockingConfig,
    BlockingKey,
    build_blocks,
    candidate_pairs,
    default_blocking_config,
    featurize,
    featurize_all,
    pair_reduction_ratio,
)
from dedupkit.core import CandidatePair, default_schema
from dedupkit.errors import ConfigError, MissingRecordError
from dedupkit.similarity import make_scorer

from conftest import make_record


def test_shared_values_make_overlapping_blocks():
    a = make_record(1, invoice_number="101", supplier_id="S1")
    b = make_record(2, invoice_number="101", supplier_id="S9")
    c = make_record(3, invoice_number="777", supplier_id="S9")
    cfg = BlockingConfig((BlockingKey("invoice_number"), BlockingKey("supplier_id")))
    multi = [blk.member_ids for blk in build_blocks([a, b, c], cfg) if len(blk.member_ids) > 1]
    assert sorted(multi) == [(1, 2), (2, 3)]
    assert [p.key for p in candidate_pairs(build_blocks([a, b, c], cfg))] == [(1, 2), (2, 3)]


def test_block_edge_cases():
    cfg = BlockingConfig((BlockingKey("supplier_id"),))
    assert build_blocks([], cfg) == []
    same = [make_record(i, supplier_id="S1") for i in (5, 2, 9)]
    assert [b.member_ids for b in build_blocks(same, cfg)] == [(2, 5, 9)]
    singles = [make_record(i) for i in range(4)]
    assert candidate_pairs(build_blocks(singles, cfg)) == []


def test_pair_emitted_once_across_keys():
    blocks = [Block("k1", (1, 2)), Block("k2", (1, 2))]
    assert candidate_pairs(blocks) == [CandidatePair(1, 2)]


def test_block_invariants():
    with pytest.raises(ValueError):
        Block("x", (2, 1))
    with pytest.raises(ValueError):
        Block("x", ())


def test_config_validation():
    with pytest.raises(ConfigError):
        BlockingKey("colour")
    with pytest.raises(ConfigError):
        BlockingKey("invoice_number", "prefix")
    with pytest.raises(ConfigError):
        BlockingKey("invoice_number", "prefix", k=0)
    with pytest.raises(ConfigError):
        BlockingKey("invoice_number", "soundex")
    with pytest.raises(ConfigError):
        BlockingConfig(())
    with pytest.raises(ConfigError):
        BlockingConfig.from_dict({"keys": [{"field": "supplier_id", "bogus": 1}]})
    cfg = default_blocking_config()
    assert BlockingConfig.from_dict(cfg.to_dict()) == cfg


def test_transforms():
    assert BlockingKey("invoice_number", "digits_only").apply("INV-00 12") == "0012"
    assert BlockingKey("invoice_number", "prefix", k=3).apply("ABCDEF") == "ABC"
    assert BlockingKey("supplier_name", "normalized_lower").apply("  Acme   LTD ") == "acme ltd"


def test_empty_key_values_are_not_blocked():
    recs = [make_record(1, invoice_number="ABC"), make_record(2, invoice_number="XYZ")]
    cfg = BlockingConfig((BlockingKey("invoice_number", "digits_only"),))
    assert build_blocks(recs, cfg) == []


def test_blocks_stay_within_clients():
    recs = [make_record(1, supplier_id="S1"), make_record(2, supplier_id="S1", client_id="C02")]
    keys = (BlockingKey("supplier_id"),)
    assert candidate_pairs(build_blocks(recs, BlockingConfig(keys))) == []
    assert len(candidate_pairs(build_blocks(recs, BlockingConfig(keys, within_client=False)))) == 1


record_strategy = st.builds(
    lambda rid, client, num, sup, date: make_record(rid, client_id=client, invoice_number=num,
                                                    supplier_id=sup, invoice_date=date),
    rid=st.integers(0, 10**6),
    client=st.sampled_from(["C01", "C02"]),
    num=st.text(alphabet="A1-2", max_size=3),
    sup=st.sampled_from(["S1", "S2", "S3"]),
    date=st.sampled_from(["2019-01-01", "2019-01-02"]),
)


@settings(max_examples=150, deadline=None)
@given(recs=st.lists(record_strategy, max_size=25, unique_by=lambda r: r.record_id))
def test_candidates_equal_brute_force_key_agreement(recs):
    cfg = default_blocking_config()
    expected = set()
    for a, b in combinations(recs, 2):
        if a.client_id != b.client_id:
            continue
        for key in cfg.keys:
            va, vb = key.apply(a.field_value(key.field)), key.apply(b.field_value(key.field))
            if va and va == vb:
                expected.add((min(a.record_id, b.record_id), max(a.record_id, b.record_id)))
    got = candidate_pairs(build_blocks(recs, cfg))
    assert [p.key for p in got] == sorted(expected)


def test_pair_reduction_ratio():
    assert pair_reduction_ratio(100, 4950) == 0.0
    assert pair_reduction_ratio(100, 0) == 1.0
    assert pair_reduction_ratio(4, 3) == 0.5
    with pytest.raises(ConfigError):
        pair_reduction_ratio(1, 0)


def test_featurize_identical_records_is_all_ones():
    a = make_record(1)
    b = make_record(2, invoice_number=a.invoice_number, supplier_id=a.supplier_id)
    fv = featurize(CandidatePair(1, 2), [a, b], default_schema())
    assert fv.values == (1.0,) * 20


def test_featurize_disjoint_records():
    a = make_record(1, invoice_number="1111", invoice_date="2019-01-01", supplier_id="S1",
                    supplier_name="aaa", amount_minor=1, description="bbb")
    b = make_record(2, invoice_number="2222", invoice_date="2020-02-02", supplier_id="T2",
                    supplier_name="zzz", amount_minor=2, description="yyy")
    schema = default_schema()
    fv = featurize(CandidatePair(1, 2), {1: a, 2: b}, schema)
    for e, v in zip(schema.entries, fv.values):
        if e.metric == "binary":
            assert v == 0.0
        assert v == make_scorer(e.metric, e.params)(a.field_value(e.field), b.field_value(e.field))


def test_featurize_missing_record():
    with pytest.raises(LookupError):
        featurize(CandidatePair(1, 3), [make_record(1)], default_schema())
    with pytest.raises(MissingRecordError):
        featurize(CandidatePair(1, 3), [make_record(1)], default_schema())


def test_parallel_featurization_matches_serial():
    recs = [make_record(i, invoice_number=f"INV{i % 37}", supplier_name=f"Supplier {i % 11}")
            for i in range(60)]
    pairs = [CandidatePair(a, b) for a, b in combinations(range(60), 2)][:1500]
    serial = featurize_all(pairs, recs, default_schema(), threads=1)
    parallel = featurize_all(pairs, recs, default_schema(), threads=2)
    assert serial == parallel
    assert [v.pair for v in parallel] == pairs
