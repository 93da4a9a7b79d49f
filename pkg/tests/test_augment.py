from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bitextkit.augment import (
    DOWNSAMPLE_SYNTHETIC,
    MixSpec,
    TagSpec,
    mix_corpora,
    mix_indices,
    repetition_counts,
    tag_synthetic,
    untag,
)
from bitextkit.corpus_io import Origin, SentencePair
from bitextkit.errors import AlreadyTagged, EmptyBothInputs, OriginMismatch, TagCollision, ValidationError


def _auth(n):
    return [SentencePair(f"a{i}", f"A{i}", line_no=i + 1) for i in range(n)]


def _synth(n):
    return [SentencePair(f"s{i}", f"S{i}", Origin.SYNTHETIC, line_no=i + 1) for i in range(n)]


def test_tag_and_untag_round_trip():
    pair = _synth(1)[0]
    tagged = tag_synthetic(pair)
    assert tagged.source == "<bt> s0" and tagged.tags == ("<bt>",)
    assert untag(tagged) == pair
    assert untag(pair) is pair


def test_tag_errors():
    with pytest.raises(OriginMismatch):
        tag_synthetic(_auth(1)[0])
    with pytest.raises(AlreadyTagged):
        tag_synthetic(tag_synthetic(_synth(1)[0]))
    with pytest.raises(TagCollision):
        tag_synthetic(SentencePair("has <bt> inside", "x", Origin.SYNTHETIC))
    with pytest.raises(ValidationError):
        TagSpec("two words")


@pytest.mark.parametrize("text, parts", [("1:2", (1, 2)), ("3:1", (3, 1))])
def test_parse_ratio(text, parts):
    spec = MixSpec.parse_ratio(text)
    assert (spec.ratio_authentic, spec.ratio_synthetic) == parts
    assert spec.ratio == text


@pytest.mark.parametrize("text", ["0:2", "1:0", "1/2", "a:b", "1:2:3", "-1:2"])
def test_parse_ratio_rejects(text):
    with pytest.raises(ValidationError):
        MixSpec.parse_ratio(text)


@settings(max_examples=300)
@given(st.integers(1, 300), st.integers(1, 600), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32))
def test_upsample_counts(n_a, n_s, a, s, seed):
    spec = MixSpec(a, s, shuffle_seed=seed)
    counts = repetition_counts(n_a, n_s, spec)
    target = n_s * a // s
    if target > n_a:
        assert counts.sum() == target
        r = target // n_a
        assert set(counts.tolist()) <= {r, r + 1}
    else:
        assert counts.tolist() == [1] * n_a
    order = mix_indices(n_a, n_s, spec)
    # every synthetic pair exactly once; authentic pairs per their counts
    tally = Counter(order.tolist())
    assert all(tally[n_a + j] == 1 for j in range(n_s))
    assert [tally[i] for i in range(n_a)] == counts.tolist()


@settings(max_examples=200)
@given(st.integers(1, 200), st.integers(1, 800), st.integers(0, 2**32))
def test_downsample_keeps_authentic_once(n_a, n_s, seed):
    spec = MixSpec(1, 2, mode=DOWNSAMPLE_SYNTHETIC, shuffle_seed=seed)
    tally = Counter(mix_indices(n_a, n_s, spec).tolist())
    assert [tally[i] for i in range(n_a)] == [1] * n_a
    n_synth = sum(1 for i in tally if i >= n_a)
    assert n_synth == min(n_s, 2 * n_a)
    assert all(v == 1 for v in tally.values())


def test_mix_is_seeded():
    a, s = _auth(30), _synth(100)
    one = list(mix_corpora(a, s, MixSpec(shuffle_seed=5), TagSpec()))
    two = list(mix_corpora(a, s, MixSpec(shuffle_seed=5), TagSpec()))
    other = list(mix_corpora(a, s, MixSpec(shuffle_seed=6), TagSpec()))
    assert one == two
    assert one != other
    assert sum(p.origin is Origin.SYNTHETIC for p in one) == 100
    assert all(p.source.startswith("<bt> ") for p in one if p.origin is Origin.SYNTHETIC)
    assert not any(p.source.startswith("<bt>") for p in one if p.origin is Origin.AUTHENTIC)


def test_mix_checks_origins_and_empty_inputs():
    with pytest.raises(OriginMismatch):
        list(mix_corpora(_synth(2), _synth(2)))
    with pytest.raises(OriginMismatch):
        list(mix_corpora(_auth(2), _auth(2)))
    with pytest.raises(EmptyBothInputs):
        list(mix_corpora([], []))
    assert len(list(mix_corpora(_auth(3), []))) == 3
    assert len(list(mix_corpora([], _synth(4)))) == 4
