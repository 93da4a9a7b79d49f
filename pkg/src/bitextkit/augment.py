"""Building training corpora from authentic and synthetic pairs.

Synthetic pairs get a tag token on the source side. The two sets are then
mixed at a target authentic:synthetic ratio, by default by repeating authentic
pairs, and shuffled deterministically. Only an index permutation is held in
memory; the pairs themselves are fetched from the input sequences, which may
be disk-backed (:class:`~bitextkit.corpus_io.IndexedCorpus`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .corpus_io import Origin, SentencePair
from .errors import AlreadyTagged, EmptyBothInputs, OriginMismatch, TagCollision, ValidationError

logger = logging.getLogger(__name__)

UPSAMPLE_AUTHENTIC = "upsample_authentic"
DOWNSAMPLE_SYNTHETIC = "downsample_synthetic"
MIX_MODES = (UPSAMPLE_AUTHENTIC, DOWNSAMPLE_SYNTHETIC)

# Independent PCG64 streams under one mixing seed.
_STREAM_REMAINDER = 1
_STREAM_SHUFFLE = 2
_STREAM_SUBSAMPLE = 3


@dataclass(frozen=True)
class TagSpec:
    tag_token: str = "<bt>"

    def __post_init__(self):
        if not self.tag_token or any(c.isspace() for c in self.tag_token):
            raise ValidationError("tag.tag_token", "must be non-empty and contain no whitespace")


@dataclass(frozen=True)
class MixSpec:
    ratio_authentic: int = 1
    ratio_synthetic: int = 2
    mode: str = UPSAMPLE_AUTHENTIC
    shuffle_seed: int = 0

    def __post_init__(self):
        for name in ("ratio_authentic", "ratio_synthetic"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValidationError(f"mix.{name}", "must be an integer >= 1")
        if self.mode not in MIX_MODES:
            raise ValidationError("mix.mode", f"must be one of {', '.join(MIX_MODES)}")
        if not 0 <= self.shuffle_seed < 2**64:
            raise ValidationError("mix.shuffle_seed", "must be an unsigned 64-bit integer")

    @classmethod
    def parse_ratio(cls, text: str, **kwargs) -> "MixSpec":
        """``"1:2"`` -> ``MixSpec(1, 2)``."""
        parts = str(text).split(":")
        if len(parts) != 2:
            raise ValidationError("mix.ratio", f"expected 'a:s', got {text!r}")
        try:
            a, s = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValidationError("mix.ratio", f"expected integers in 'a:s', got {text!r}") from None
        if a < 1 or s < 1:
            raise ValidationError("mix.ratio", f"both parts must be >= 1, got {text!r}")
        return cls(a, s, **kwargs)

    @property
    def ratio(self) -> str:
        return f"{self.ratio_authentic}:{self.ratio_synthetic}"


def tag_synthetic(pair: SentencePair, spec: TagSpec = TagSpec()) -> SentencePair:
    """Prefix the source with the tag token and record it in ``tags``."""
    if pair.origin is not Origin.SYNTHETIC:
        raise OriginMismatch(f"line {pair.line_no}: only synthetic pairs are tagged")
    tag = spec.tag_token
    if tag in pair.tags:
        raise AlreadyTagged(f"line {pair.line_no}: already tagged with {tag!r}")
    if tag in pair.source.split() or tag in pair.target.split():
        raise TagCollision(f"line {pair.line_no}: tag {tag!r} occurs in the corpus text")
    source = f"{tag} {pair.source}" if pair.source else tag
    return SentencePair(source, pair.target, pair.origin, pair.tags + (tag,), pair.line_no)


def untag(pair: SentencePair, spec: TagSpec = TagSpec()) -> SentencePair:
    tag = spec.tag_token
    if tag not in pair.tags:
        return pair
    source = pair.source
    if source == tag:
        source = ""
    elif source.startswith(tag + " "):
        source = source[len(tag) + 1 :]
    tags = tuple(t for t in pair.tags if t != tag)
    return SentencePair(source, pair.target, pair.origin, tags, pair.line_no)


def _permutation(n: int, seed: int, stream: int) -> np.ndarray:
    """Deterministic permutation of range(n): stable argsort of raw PCG64 keys."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(stream,))
    keys = np.random.PCG64(ss).random_raw(n)
    return np.argsort(keys, kind="stable")


def repetition_counts(n_authentic: int, n_synthetic: int, spec: MixSpec) -> np.ndarray:
    """How many times each authentic pair is emitted.

    In upsampling mode the authentic total is ``floor(S * a / s)``, split as
    evenly as possible: every pair gets ``r`` or ``r + 1`` copies, and the
    pairs receiving the extra copy are chosen by the seed. When authentic
    data already exceeds that total, every pair is kept once.
    """
    counts = np.ones(n_authentic, dtype=np.int64)
    if spec.mode != UPSAMPLE_AUTHENTIC or n_authentic == 0 or n_synthetic == 0:
        return counts
    target = n_synthetic * spec.ratio_authentic // spec.ratio_synthetic
    if target <= n_authentic:
        if target < n_authentic:
            logger.warning(
                "authentic data (%d) already exceeds ratio %s against %d synthetic pairs; not upsampling",
                n_authentic,
                spec.ratio,
                n_synthetic,
            )
        return counts
    r, remainder = divmod(target, n_authentic)
    counts[:] = r
    if remainder:
        counts[_permutation(n_authentic, spec.shuffle_seed, _STREAM_REMAINDER)[:remainder]] += 1
    return counts


def mix_indices(n_authentic: int, n_synthetic: int, spec: MixSpec) -> np.ndarray:
    """Shuffled emission order over ``[0, A)`` (authentic) and ``[A, A+S)`` (synthetic)."""
    if n_authentic == 0 and n_synthetic == 0:
        raise EmptyBothInputs("both authentic and synthetic inputs are empty")
    counts = repetition_counts(n_authentic, n_synthetic, spec)
    authentic = np.repeat(np.arange(n_authentic, dtype=np.int64), counts)
    synthetic = np.arange(n_authentic, n_authentic + n_synthetic, dtype=np.int64)
    if spec.mode == DOWNSAMPLE_SYNTHETIC and n_authentic:
        keep = n_authentic * spec.ratio_synthetic // spec.ratio_authentic
        if keep < n_synthetic:
            chosen = np.sort(_permutation(n_synthetic, spec.shuffle_seed, _STREAM_SUBSAMPLE)[:keep])
            synthetic = synthetic[chosen]
    order = np.concatenate([authentic, synthetic])
    return order[_permutation(len(order), spec.shuffle_seed, _STREAM_SHUFFLE)]


def mix_corpora(
    authentic: Sequence[SentencePair],
    synthetic: Sequence[SentencePair],
    spec: MixSpec = MixSpec(),
    tag: Optional[TagSpec] = None,
) -> Iterator[SentencePair]:
    """Yield the mixed, shuffled corpus.

    Inputs need ``len`` and indexing. With ``tag`` set, synthetic pairs that
    do not yet carry the tag are tagged on the way out.
    """
    n_a, n_s = len(authentic), len(synthetic)
    order = mix_indices(n_a, n_s, spec)
    for i in order.tolist():
        if i < n_a:
            pair = authentic[i]
            if pair.origin is not Origin.AUTHENTIC:
                raise OriginMismatch(f"authentic input line {pair.line_no} is marked {pair.origin.value}")
        else:
            pair = synthetic[i - n_a]
            if pair.origin is not Origin.SYNTHETIC:
                raise OriginMismatch(f"synthetic input line {pair.line_no} is marked {pair.origin.value}")
            if tag is not None and tag.tag_token not in pair.tags:
                pair = tag_synthetic(pair, tag)
        yield pair
