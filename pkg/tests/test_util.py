import pytest
from hypothesis import given
from hypothesis import strategies as st

from outagekit.util import (
    clip01,
    parse_ts,
    stable_id,
    token_overlap,
    tokens,
    ts_to_iso,
)


def test_parse_ts_epoch_ms_passthrough():
    assert parse_ts(1748750460000) == 1748750460000


def test_parse_ts_iso():
    assert parse_ts("2025-06-01T04:01:00Z") == 1748750460000
    assert parse_ts("2025-06-01T04:01:00+00:00") == 1748750460000


def test_parse_ts_roundtrip_through_iso():
    ts = 1748750460000
    assert parse_ts(ts_to_iso(ts)) == ts


def test_parse_ts_rejects_garbage():
    with pytest.raises(ValueError):
        parse_ts("not a timestamp")


def test_tokens_lowercase_alnum():
    assert tokens("Cooling-System restart, Initiated!") == [
        "cooling", "system", "restart", "initiated"
    ]


def test_token_overlap_is_overlap_coefficient():
    # |intersection| / min(|a|, |b|) on token sets
    assert token_overlap("a b c d", "c d e") == pytest.approx(2 / 3)
    assert token_overlap("a b", "a b") == 1.0
    assert token_overlap("a b", "c d") == 0.0
    assert token_overlap("", "a") == 0.0


@given(st.text(), st.text())
def test_token_overlap_symmetric_and_bounded(a, b):
    v = token_overlap(a, b)
    assert 0.0 <= v <= 1.0
    assert v == token_overlap(b, a)


@given(st.text(alphabet="abc xyz", min_size=1))
def test_token_overlap_reflexive(a):
    expected = 1.0 if tokens(a) else 0.0
    assert token_overlap(a, a) == expected


def test_stable_id_deterministic_and_prefixed():
    a = stable_id("kca", "x", "y")
    b = stable_id("kca", "x", "y")
    assert a == b
    assert a.startswith("kca-")
    assert a != stable_id("kca", "x", "z")
    assert a != stable_id("obs", "x", "y")


def test_stable_id_sensitive_to_part_boundaries():
    assert stable_id("p", "ab", "c") != stable_id("p", "a", "bc")


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_clip01(x):
    v = clip01(x)
    assert 0.0 <= v <= 1.0
    if 0.0 <= x <= 1.0:
        assert v == x
