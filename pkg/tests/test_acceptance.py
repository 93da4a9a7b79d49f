"""Acceptance gate: one test per criterion, each at its stated tolerance.

Run on its own with ``pytest tests/test_acceptance.py -v``; the summary at
the end prints one PASS/FAIL line per criterion.
"""

import itertools
import json
import random
import time
import tracemalloc
from pathlib import Path

import numpy as np
import pytest

from bitextkit.augment import MixSpec, mix_corpora, repetition_counts
from bitextkit.bleu import bleu, signature
from bitextkit.bt_loop import BTConfig, TrainerSpec, TranslatorSpec, run_loop
from bitextkit.corpus_io import CorpusStats, Deduplicator, Origin, SentencePair, read_parallel
from bitextkit.filters import Action, FilterChain, levenshtein
from bitextkit.noising import NoiseConfig, NoiseRng, noise_sentence, permute_within_k

import golden_corpus
import oracles
from conftest import FIXTURES, NOOP_TRAINER, REV_WORDS

criterion = pytest.mark.criterion


def _fixture_pairs():
    lines = (FIXTURES / "bleu_pairs.tsv").read_text(encoding="utf-8").split("\n")[:-1]
    return [tuple(line.split("\t")) for line in lines]


# ---------------------------------------------------------------------------


@criterion("BLEU oracle agreement within 0.01 on >=50 mixed EN/IS pairs, < 1 s")
def test_bleu_oracle_agreement(detail):
    pairs = _fixture_pairs()
    assert len(pairs) >= 50
    hyps = [h for h, _ in pairs]
    refs = [r for _, r in pairs]
    golden = json.loads((FIXTURES / "bleu_golden.json").read_text(encoding="utf-8"))

    t0 = time.perf_counter()
    ours = bleu(hyps, refs)
    elapsed = time.perf_counter() - t0

    # route 1: values frozen from the reference scorer
    assert abs(ours.score - golden["corpus"]["score"]) <= 0.01
    assert ours.hyp_length == golden["corpus"]["hyp_length"]
    assert ours.ref_length == golden["corpus"]["ref_length"]
    for a, b in zip(ours.precisions, golden["corpus"]["precisions"]):
        assert abs(a - b) <= 1e-4
    for part, sl in (("english", slice(0, 25)), ("icelandic", slice(25, 50))):
        assert abs(bleu(hyps[sl], refs[sl]).score - golden[part]["score"]) <= 0.01

    # route 2: the reference scorer itself, run live
    sacrebleu = pytest.importorskip("sacrebleu")
    assert sacrebleu.__version__ == "1.5.1"
    live = sacrebleu.corpus_bleu(hyps, [refs], smooth_method="exp", tokenize="13a")
    assert abs(ours.score - live.score) <= 0.01

    # signature semantics
    assert signature("en-is") == "case.mixed+lang.en-is+numrefs.1+smooth.exp+tok.13a+version.1.5.1"
    assert elapsed < 1.0
    detail(f"score {ours.score:.4f} vs {golden['corpus']['score']:.4f}, {elapsed * 1000:.1f} ms")


@criterion("Identity BLEU is exactly 100.0")
def test_identity_bleu(detail):
    pairs = _fixture_pairs()
    refs = [r for _, r in pairs if r.strip()]
    score = bleu(refs, refs)
    assert score.score == 100.0
    assert score.precisions == (1.0, 1.0, 1.0, 1.0)
    assert score.brevity_penalty == 1.0
    for r in refs:
        if len(r.split()) >= 4:
            assert bleu([r], [r]).score == 100.0
    detail(f"{len(refs)} fixtures")


@criterion("Golden filter corpus: verdicts match planted labels, report reconciles, < 1 s")
def test_golden_filter_corpus(tmp_path, detail):
    records = golden_corpus.generate()
    assert len(records) == 1000
    path = tmp_path / "golden.tsv"
    golden_corpus.write_tsv(records, path)

    chain = FilterChain()
    stats = CorpusStats()
    rejected = {}
    t0 = time.perf_counter()
    survivors = list(chain.run(read_parallel(path), stats, lambda p, v: rejected.__setitem__(p.line_no, v)))
    elapsed = time.perf_counter() - t0

    by_line = {p.line_no: p for p in survivors}
    mismatches = []
    for line_no, (src, tgt, label) in enumerate(records, 1):
        if label[0] == "drop":
            v = rejected.get(line_no)
            if v is None or (v.filter_id, v.reason) != label[1:]:
                mismatches.append((line_no, label, v))
        elif label[0] == "fix":
            p = by_line.get(line_no)
            if p is None or (p.source, p.target) != label[1:]:
                mismatches.append((line_no, label, p))
        else:
            p = by_line.get(line_no)
            if p is None or (p.source, p.target) != (src, tgt):
                mismatches.append((line_no, label, p))
            # each kept line's own verdict is a plain keep
            assert chain.apply(SentencePair(src, tgt))[0].action is Action.KEEP
    assert not mismatches, mismatches[:5]

    drops, fixes, keeps = golden_corpus.expected_counts(records)
    assert stats.per_filter_drops == drops
    assert stats.input_count == 1000
    assert stats.pair_count == fixes + keeps
    assert stats.reconciles()
    assert stats.input_count == stats.pair_count + stats.total_drops + stats.duplicate_count
    assert elapsed < 1.0
    detail(f"{stats.total_drops} drops, {fixes} fixes, {elapsed * 1000:.0f} ms")


@criterion("Noising invariants: k=3 displacement, multiset, mask/drop rates, k=1 identity")
def test_noising_invariants(detail):
    words = [f"w{i}" for i in range(8)]
    worst = 0
    for trial in range(10_000):
        out = permute_within_k(words, 3, NoiseRng(2021, trial))
        assert sorted(out) == sorted(words)
        worst = max(worst, oracles.max_displacement(words, out))
        assert permute_within_k(words, 1, NoiseRng(2021, trial)) == words
    assert worst <= 3

    # the full sentence path too, with dropout and masking disabled
    cfg = NoiseConfig(k=3, p_mask=0.0, p_drop=0.0, seed=5)
    sentence = " ".join(words)
    for trial in range(10_000):
        out = noise_sentence(sentence, cfg, trial).split()
        assert sorted(out) == sorted(words)
        assert oracles.max_displacement(words, out) <= 3

    long_sentence = " ".join(f"t{i}" for i in range(100))
    n_tokens = 100 * 1000

    mask_cfg = NoiseConfig(k=3, p_mask=0.1, p_drop=0.0, seed=11)
    masked = sum(noise_sentence(long_sentence, mask_cfg, i).split().count("<mask>") for i in range(1000))
    mask_rate = masked / n_tokens

    drop_cfg = NoiseConfig(k=3, p_mask=0.0, p_drop=0.1, seed=13)
    kept = sum(len(noise_sentence(long_sentence, drop_cfg, i).split()) for i in range(1000))
    drop_rate = (n_tokens - kept) / n_tokens

    assert abs(mask_rate - 0.1) <= 0.01
    assert abs(drop_rate - 0.1) <= 0.01
    detail(f"max displacement {worst}, mask {mask_rate:.4f}, drop {drop_rate:.4f}")


@criterion("Mixing ratio 1:2: deviation <= 1 pair, per-pair counts floor/ceil")
def test_mixing_ratio(detail):
    spec = MixSpec(1, 2, shuffle_seed=99)
    notes = []
    for n_a, n_s in ((100, 200), (50, 200), (30, 200), (7, 200)):
        authentic = [SentencePair(f"a{i}", f"A{i}") for i in range(n_a)]
        synthetic = [SentencePair(f"s{i}", f"S{i}", Origin.SYNTHETIC) for i in range(n_s)]
        out = list(mix_corpora(authentic, synthetic, spec))
        emitted = {}
        for p in out:
            if p.origin is Origin.AUTHENTIC:
                emitted[p.source] = emitted.get(p.source, 0) + 1
        n_auth_out = sum(emitted.values())
        n_syn_out = sum(p.origin is Origin.SYNTHETIC for p in out)
        assert n_syn_out == n_s
        # achieved authentic count vs the exact 1:2 share of the synthetic count
        assert abs(n_auth_out - n_s * 1 / 2) <= 1
        r = n_auth_out / n_a
        counts = [emitted.get(f"a{i}", 0) for i in range(n_a)]
        assert set(counts) <= {int(np.floor(r)), int(np.ceil(r))}
        assert counts == repetition_counts(n_a, n_s, spec).tolist()
        notes.append(f"({n_a},{n_s})->{n_auth_out}:{n_syn_out}")
    detail(", ".join(notes))


@criterion("End-to-end BT loop: 2 iterations, 150-pair mix with 100 tagged, deterministic, < 5 s")
def test_end_to_end_bt_loop(tmp_path, desk_corpus, detail):
    def run(work):
        cfg = BTConfig(
            work_dir=work,
            authentic_source=desk_corpus / "auth.en",
            authentic_target=desk_corpus / "auth.is",
            mono={"en": desk_corpus / "mono.en", "is": desk_corpus / "mono.is"},
            translator=TranslatorSpec(REV_WORDS),
            trainer=TrainerSpec(NOOP_TRAINER),
            mix=MixSpec(1, 2),
            seed=42,
        )
        t0 = time.perf_counter()
        result = run_loop(cfg)
        return result, time.perf_counter() - t0

    first, t1 = run(tmp_path / "run1")
    second, t2 = run(tmp_path / "run2")

    for direction in ("en-is", "is-en"):
        state = first.states[direction]
        assert state.iteration == 2
        assert [r.generator_saw_bt for r in state.history] == [False, True]
        for rec in state.history:
            mixed_src = rec.mixed[0].read_text(encoding="utf-8").splitlines()
            mixed_tgt = rec.mixed[1].read_text(encoding="utf-8").splitlines()
            assert len(mixed_src) == len(mixed_tgt) == 150
            assert sum(line.startswith("<bt> ") for line in mixed_src) == 100
            assert sum(line.count("<bt>") for line in mixed_src) == 100
            syn = rec.synthetic[0].read_text(encoding="utf-8").splitlines()
            assert len(syn) == 100

    files1 = sorted(p.relative_to(tmp_path / "run1") for p in (tmp_path / "run1").rglob("*") if p.is_file())
    files2 = sorted(p.relative_to(tmp_path / "run2") for p in (tmp_path / "run2").rglob("*") if p.is_file())
    assert files1 == files2 and len(files1) == 4 * 6
    for rel in files1:
        assert (tmp_path / "run1" / rel).read_bytes() == (tmp_path / "run2" / rel).read_bytes(), rel

    assert t1 < 5.0 and t2 < 5.0
    detail(f"{len(files1)} artifacts identical, {t1:.2f}s / {t2:.2f}s")


@criterion("Edit distance agrees with full DP: exhaustive {a,b,á} len<=6 plus 1,000 random pairs")
def test_levenshtein_oracle(detail):
    alphabet = "abá"
    by_length = {n: oracles.all_strings(alphabet, n) for n in range(7)}
    checked = 0
    for la, lefts in by_length.items():
        for lb, rights in by_length.items():
            if la == 0 or lb == 0:
                expected = np.full((len(lefts), len(rights)), max(la, lb))
            else:
                expected = oracles.levenshtein_dp_block(lefts, rights)
            got = np.array([[levenshtein(a, b) for b in rights] for a in lefts])
            assert np.array_equal(got, expected), (la, lb)
            checked += expected.size

    rng = random.Random(7)
    letters = "abcdeáéíóúýþæöð "
    for _ in range(1000):
        a = "".join(rng.choice(letters) for _ in range(rng.randint(7, 40)))
        b = "".join(rng.choice(letters) for _ in range(rng.randint(7, 40)))
        if rng.random() < 0.5:
            # near neighbours exercise small distances too
            b = list(a)
            for _ in range(rng.randint(0, 5)):
                b[rng.randrange(len(b))] = rng.choice(letters)
            b = "".join(b)
        assert levenshtein(a, b) == oracles.levenshtein_dp(a, b)
    detail(f"{checked:,} exhaustive pairs + 1,000 random")


def _throughput_corpus(n_lines, seed=0):
    """Lazily built synthetic bitext: random EN/IS sentences, some defects."""
    rng = random.Random(seed)
    en = golden_corpus.EN_WORDS
    is_ = golden_corpus.IS_WORDS
    pool = 20_000
    sources, targets = [], []
    for i in range(pool):
        n = rng.randint(4, 20)
        s = " ".join(rng.choice(en) for _ in range(n)).capitalize() + "."
        t = " ".join(rng.choice(is_) for _ in range(n + rng.randint(-2, 2))).capitalize() + "."
        if i % 5 == 0:
            num = str(rng.randint(1, 5000))
            s, t = f"{s[:-1]} {num}.", f"{t[:-1]} {num}."
        if i % 50 == 0:
            t = t.encode("utf-8").decode("latin-1")
        if i % 97 == 0:
            t = ""
        sources.append(s)
        targets.append(t)
    a = np.random.default_rng(seed).integers(0, pool, size=n_lines).tolist()
    b = np.random.default_rng(seed + 1).integers(0, pool, size=n_lines).tolist()
    for i, (x, y) in enumerate(zip(a, b), 1):
        yield SentencePair(sources[x], targets[y], line_no=i)


@criterion("Throughput >= 50k pairs/s single-threaded over 1M lines; dedup memory tracks distinct keys")
def test_throughput_and_dedup_memory(detail):
    n = 1_000_000
    chain = FilterChain()
    stats = CorpusStats()
    # built up front so that only the chain is timed
    corpus = list(_throughput_corpus(n))
    t0 = time.perf_counter()
    for _ in chain.run(corpus, stats):
        pass
    elapsed = time.perf_counter() - t0
    rate = n / elapsed
    assert stats.input_count == n and stats.reconciles()

    def peak(n_lines, n_distinct):
        pairs = [SentencePair(f"source sentence {i}", f"markmiðssetning {i}") for i in range(n_distinct)]
        dedup = Deduplicator()
        tracemalloc.start()
        for p in itertools.islice(itertools.cycle(pairs), n_lines):
            dedup.is_new(p)
        _, top = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        assert len(dedup.seen) == n_distinct
        assert dedup.duplicates == n_lines - n_distinct
        return top

    few_short = peak(50_000, 5_000)
    few_long = peak(500_000, 5_000)
    many = peak(500_000, 50_000)
    # 10x the stream with the same distinct keys: memory roughly flat
    assert few_long < 1.25 * few_short
    # 10x the distinct keys: memory grows with them
    assert many > 5 * few_short
    assert rate >= 50_000
    detail(f"{rate:,.0f} pairs/s; dedup peak {few_short / 1e6:.2f} MB -> {few_long / 1e6:.2f} MB (10x lines), {many / 1e6:.2f} MB (10x keys)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
