import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bitextkit.bleu import bleu, score_from_stats, sentence_stats, signature, tokenize_13a
from bitextkit.errors import EmptyCorpus, LengthMismatch

from conftest import FIXTURES


def _fixture():
    lines = (FIXTURES / "bleu_pairs.tsv").read_text(encoding="utf-8").split("\n")[:-1]
    pairs = [tuple(line.split("\t")) for line in lines]
    golden = json.loads((FIXTURES / "bleu_golden.json").read_text(encoding="utf-8"))
    return pairs, golden


@pytest.mark.parametrize(
    "text, tokens",
    [
        ("Hello, world.", ["Hello", ",", "world", "."]),
        ("It cost 1,000.50 krónur.", ["It", "cost", "1,000.50", "krónur", "."]),
        ("state-of-the-art", ["state-of-the-art"]),
        ("pages 10-12", ["pages", "10", "-", "12"]),
        ("&quot;Já&quot; &amp; nei", ['"', "Já", '"', "&", "nei"]),
        ("(a) [b] {c}", ["(", "a", ")", "[", "b", "]", "{", "c", "}"]),
        ("don't stop", ["don't", "stop"]),
        ("Þórður sagði: „halló“!", ["Þórður", "sagði", ":", "„halló“", "!"]),
    ],
)
def test_tokenize_13a(text, tokens):
    assert tokenize_13a(text) == tokens


def test_every_fixture_sentence_matches_frozen_scores():
    pairs, golden = _fixture()
    assert len(golden["sentences"]) == len(pairs)
    for (hyp, ref), want in zip(pairs, golden["sentences"]):
        got = bleu([hyp], [ref])
        assert got.score == pytest.approx(want["score"], abs=1e-9), (hyp, ref)
        assert got.brevity_penalty == pytest.approx(want["brevity_penalty"], abs=1e-12)
        assert (got.hyp_length, got.ref_length) == (want["hyp_length"], want["ref_length"])


words = st.sampled_from("the cat sat on mat . , kötturinn sat á mottunni 12 3.5 - ( ) \" ' ! ?".split())
sentence = st.lists(words, min_size=1, max_size=15).map(" ".join)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(sentence, sentence), min_size=1, max_size=8))
def test_matches_reference_scorer(pairs):
    sacrebleu = pytest.importorskip("sacrebleu")
    hyps = [h for h, _ in pairs]
    refs = [r for _, r in pairs]
    live = sacrebleu.corpus_bleu(hyps, [refs], smooth_method="exp", tokenize="13a")
    ours = bleu(hyps, refs)
    assert ours.score == pytest.approx(live.score, abs=1e-9)
    assert list(ours.counts) == list(live.counts)
    assert list(ours.totals) == list(live.totals)


@settings(max_examples=100)
@given(st.lists(st.tuples(sentence, sentence), min_size=1, max_size=8), st.randoms())
def test_segment_order_does_not_matter(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a = bleu([h for h, _ in pairs], [r for _, r in pairs])
    b = bleu([h for h, _ in shuffled], [r for _, r in shuffled])
    assert a.score == pytest.approx(b.score, abs=1e-9)


def test_corpus_stats_are_sums_of_sentence_stats():
    pairs, _ = _fixture()
    m, t, h, r = [0] * 4, [0] * 4, 0, 0
    for hyp, ref in pairs:
        sm, st_, sh, sr = sentence_stats(hyp, ref)
        m = [x + y for x, y in zip(m, sm)]
        t = [x + y for x, y in zip(t, st_)]
        h, r = h + sh, r + sr
    assert score_from_stats(m, t, h, r) == bleu([p[0] for p in pairs], [p[1] for p in pairs])


def test_disjoint_is_small_but_positive_and_empty_hypothesis_is_zero():
    score = bleu(["alpha beta gamma delta epsilon"], ["one two three four five"])
    # no matches anywhere: precisions become 1/(2^m * total) for m = 1..4
    expected = 100 * math.exp(sum(math.log(p) for p in (1 / 10, 1 / 16, 1 / 24, 1 / 32)) / 4)
    assert score.score == pytest.approx(expected, abs=1e-12)
    assert bleu([""], ["one two three four"]).score == 0.0


def test_short_segment_scores_zero_like_reference_scorer():
    # no 4-grams at all: the reference scorer reports 0
    assert bleu(["a b c"], ["a b c"]).score == 0.0


def test_brevity_penalty():
    score = bleu(["the cat sat on"], ["the cat sat on the mat"])
    assert score.brevity_penalty == pytest.approx(math.exp(1 - 6 / 4))


def test_errors():
    with pytest.raises(LengthMismatch):
        bleu(["a"], ["a", "b"])
    with pytest.raises(EmptyCorpus):
        bleu([], [])


def test_signature():
    assert signature() == "case.mixed+numrefs.1+smooth.exp+tok.13a+version.1.5.1"
    assert bleu(["a b c d"], ["a b c d"]).format(signature("en-is")).startswith(
        "BLEU+case.mixed+lang.en-is+numrefs.1+smooth.exp+tok.13a+version.1.5.1 = 100.0 "
    )
