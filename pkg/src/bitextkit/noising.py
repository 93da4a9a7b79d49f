"""Seeded noise for synthetic (backtranslated) sentences.

Three word-level operations, applied to whitespace-delimited words:
word dropout, whole-word masking and local permutation where no word moves
more than ``k`` places.

Randomness comes from PCG64 streams keyed by ``(seed, sentence ordinal)``
through numpy's ``SeedSequence``. Both algorithms are fixed and documented,
and uniforms are derived from the raw 64-bit outputs here rather than through
a distribution method, so outputs do not depend on platform, process or the
order in which sentences are processed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import EmptyInput, ValidationError

DROP = "drop"
MASK = "mask"
PERMUTE = "permute"
DEFAULT_ORDER = (DROP, MASK, PERMUTE)

_TWO_POW_MINUS_53 = 2.0**-53


class NoiseRng:
    """Uniform draws from a PCG64 stream keyed by ``(seed, stream)``."""

    __slots__ = ("_bitgen",)

    def __init__(self, seed: int, stream: int = 0):
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
        self._bitgen = np.random.PCG64(ss)

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1), 53 bits each."""
        if n <= 0:
            return np.empty(0, dtype=np.float64)
        raw = self._bitgen.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * _TWO_POW_MINUS_53

    def random(self) -> float:
        return float(self.uniforms(1)[0])

    def randbelow(self, n: int) -> int:
        return min(int(self.random() * n), n - 1)

    def raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(n)


@dataclass(frozen=True)
class NoiseConfig:
    k: int = 3
    p_mask: float = 0.1
    p_drop: float = 0.1
    mask_token: str = "<mask>"
    seed: int = 0
    order: Tuple[str, ...] = DEFAULT_ORDER

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        if not isinstance(self.k, int) or self.k < 1:
            raise ValidationError("noise.k", "must be an integer >= 1")
        for name in ("p_mask", "p_drop"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"noise.{name}", "must lie in [0, 1]")
        if not self.mask_token or any(c.isspace() for c in self.mask_token):
            raise ValidationError("noise.mask_token", "must be non-empty and contain no whitespace")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("noise.seed", "must be an unsigned 64-bit integer")
        if sorted(self.order) != sorted(DEFAULT_ORDER):
            raise ValidationError("noise.order", f"must be a permutation of {list(DEFAULT_ORDER)}")


def permute_within_k(words: Sequence[str], k: int, rng: NoiseRng) -> List[str]:
    """Local shuffle: sort by ``i + u_i`` with ``u_i ~ U[0, k)``.

    The sort is stable, so no word ends up more than ``k`` places from where
    it started, and ``k == 1`` is the identity.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(words)
    if n < 2:
        return list(words)
    scores = np.arange(n, dtype=np.float64) + rng.uniforms(n) * k
    order = np.argsort(scores, kind="stable")
    return [words[i] for i in order]


def mask_words(words: Sequence[str], p_mask: float, mask_token: str, rng: NoiseRng) -> List[str]:
    """Replace each word by ``mask_token`` independently with probability ``p_mask``."""
    u = rng.uniforms(len(words))
    return [mask_token if x < p_mask else w for w, x in zip(words, u.tolist())]


def drop_words(words: Sequence[str], p_drop: float, rng: NoiseRng) -> List[str]:
    """Delete each word independently with probability ``p_drop``.

    Never returns an empty list for non-empty input: if every word would go,
    one uniformly chosen word stays.
    """
    n = len(words)
    u = rng.uniforms(n)
    kept = [w for w, x in zip(words, u.tolist()) if x >= p_drop]
    if not kept and n:
        kept = [words[rng.randbelow(n)]]
    return kept


def noise_words(words: Sequence[str], config: NoiseConfig, rng: NoiseRng) -> List[str]:
    out = list(words)
    for op in config.order:
        if op == DROP:
            out = drop_words(out, config.p_drop, rng)
        elif op == MASK:
            out = mask_words(out, config.p_mask, config.mask_token, rng)
        else:
            out = permute_within_k(out, config.k, rng)
    return out


def noise_sentence(text: str, config: NoiseConfig, ordinal: int = 0) -> str:
    """Noise one sentence; deterministic in ``(text, config, ordinal)``."""
    words = text.split()
    if not words:
        raise EmptyInput("cannot noise an empty sentence")
    return " ".join(noise_words(words, config, NoiseRng(config.seed, ordinal)))
