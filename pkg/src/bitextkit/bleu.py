"""Corpus BLEU with 13a tokenization and exponential smoothing.

Scores are meant to be interchangeable with the WMT-standard scorer at the
configuration ``case.mixed+numrefs.1+smooth.exp+tok.13a``:

* 13a tokenization (mteval-v13a): a few entities are unescaped, punctuation
  is split off, except ``.`` and ``,`` between digits and ``-`` not preceded
  by a digit; case is preserved.
* Modified n-gram precision for n = 1..4 with clipped counts, one reference
  per hypothesis.
* For an order with no matches the precision becomes ``1 / (2**m * total)``,
  where ``m`` counts the zero-match orders so far.
* If an order has no n-grams at all, that order and the higher ones get
  precision 0 and the score is 0. This mirrors the reference scorer.
* Brevity penalty ``exp(1 - ref/hyp)`` when the hypothesis is shorter.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .errors import EmptyCorpus, LengthMismatch

NGRAM_ORDER = 4
SCORER_COMPAT_VERSION = "1.5.1"

_LOG_ZERO = -9999999999.0

_TOKENIZE_RULES = [
    # ASCII punctuation and symbols, except . , - and '
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    # period and comma unless preceded by a digit
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    # period and comma unless followed by a digit
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    # dash when preceded by a digit
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
]


def tokenize_13a(text: str) -> List[str]:
    text = text.replace("<skipped>", "").replace("-\n", "").replace("\n", " ")
    if "&" in text:
        text = (
            text.replace("&quot;", '"')
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">")
        )
    text = f" {text} "
    for rx, repl in _TOKENIZE_RULES:
        text = rx.sub(repl, text)
    return text.split()


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: Tuple[float, ...]
    brevity_penalty: float
    hyp_length: int
    ref_length: int
    counts: Tuple[int, ...] = field(default=(), compare=False)
    totals: Tuple[int, ...] = field(default=(), compare=False)

    def format(self, signature: Optional[str] = None, width: int = 1) -> str:
        prefix = f"BLEU+{signature}" if signature else "BLEU"
        prec = "/".join(f"{100 * p:.1f}" for p in self.precisions)
        ratio = self.hyp_length / self.ref_length if self.ref_length else 0.0
        return (
            f"{prefix} = {self.score:.{width}f} {prec} (BP = {self.brevity_penalty:.3f} "
            f"ratio = {ratio:.3f} hyp_len = {self.hyp_length} ref_len = {self.ref_length})"
        )

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "precisions": list(self.precisions),
            "brevity_penalty": self.brevity_penalty,
            "hyp_length": self.hyp_length,
            "ref_length": self.ref_length,
            "counts": list(self.counts),
            "totals": list(self.totals),
        }


def signature(lang: Optional[str] = None) -> str:
    parts = ["case.mixed"]
    if lang:
        parts.append(f"lang.{lang}")
    parts += ["numrefs.1", "smooth.exp", "tok.13a", f"version.{SCORER_COMPAT_VERSION}"]
    return "+".join(parts)


def _ngrams(tokens: Sequence[str]) -> Counter:
    grams: Counter = Counter()
    for n in range(1, NGRAM_ORDER + 1):
        for i in range(len(tokens) - n + 1):
            grams[tuple(tokens[i : i + n])] += 1
    return grams


def sentence_stats(hypothesis: str, reference: str) -> Tuple[List[int], List[int], int, int]:
    """Sufficient statistics ``(matches, totals, hyp_len, ref_len)`` of one pair."""
    hyp = tokenize_13a(hypothesis.rstrip())
    ref = tokenize_13a(reference.rstrip())
    hyp_grams = _ngrams(hyp)
    ref_grams = _ngrams(ref)
    matches = [0] * NGRAM_ORDER
    totals = [0] * NGRAM_ORDER
    for gram, count in hyp_grams.items():
        n = len(gram) - 1
        totals[n] += count
        ref_count = ref_grams.get(gram)
        if ref_count:
            matches[n] += min(count, ref_count)
    return matches, totals, len(hyp), len(ref)


def score_from_stats(matches: Sequence[int], totals: Sequence[int], hyp_len: int, ref_len: int) -> BleuScore:
    precisions = [0.0] * NGRAM_ORDER
    smooth = 1.0
    for n in range(NGRAM_ORDER):
        if totals[n] == 0:
            break
        if matches[n] == 0:
            smooth *= 2
            precisions[n] = 1.0 / (smooth * totals[n])
        else:
            precisions[n] = matches[n] / totals[n]

    if hyp_len < ref_len:
        bp = math.exp(1 - ref_len / hyp_len) if hyp_len > 0 else 0.0
    else:
        bp = 1.0

    log_sum = sum(math.log(p) if p > 0 else _LOG_ZERO for p in precisions)
    score = 100.0 * bp * math.exp(log_sum / NGRAM_ORDER)
    return BleuScore(score, tuple(precisions), bp, hyp_len, ref_len, tuple(matches), tuple(totals))


def bleu(hypotheses: Sequence[str], references: Sequence[str]) -> BleuScore:
    """Corpus BLEU of ``hypotheses`` against one reference each."""
    if len(hypotheses) != len(references):
        raise LengthMismatch(f"{len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise EmptyCorpus("no segments to score")
    matches = [0] * NGRAM_ORDER
    totals = [0] * NGRAM_ORDER
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        m, t, h, r = sentence_stats(hyp, ref)
        for n in range(NGRAM_ORDER):
            matches[n] += m[n]
            totals[n] += t[n]
        hyp_len += h
        ref_len += r
    return score_from_stats(matches, totals, hyp_len, ref_len)
