"""Independent reference implementations used as test oracles.

Nothing here imports bitextkit; each function is the plainest correct
version of what it checks.
"""

import hashlib
import itertools

import numpy as np


def levenshtein_dp(a, b):
    """Full (len(a)+1) x (len(b)+1) dynamic-programming matrix."""
    m, n = len(a), len(b)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[m][n]


def all_strings(alphabet, length):
    return ["".join(p) for p in itertools.product(alphabet, repeat=length)]


def levenshtein_dp_block(lefts, rights):
    """The same DP matrix, evaluated for every (left, right) pair at once.

    All ``lefts`` share one length and all ``rights`` share one length; the
    result has shape ``(len(lefts), len(rights))``.
    """
    la = len(lefts[0])
    lb = len(rights[0])
    na, nb = len(lefts), len(rights)
    A = np.array([[ord(c) for c in s] for s in lefts], dtype=np.int32).reshape(na, la)
    B = np.array([[ord(c) for c in s] for s in rights], dtype=np.int32).reshape(nb, lb)
    prev = [np.full((na, nb), j, dtype=np.int32) for j in range(lb + 1)]
    for i in range(1, la + 1):
        cur = [np.full((na, nb), i, dtype=np.int32)]
        for j in range(1, lb + 1):
            cost = (A[:, i - 1][:, None] != B[:, j - 1][None, :]).astype(np.int32)
            cur.append(np.minimum(np.minimum(prev[j] + 1, cur[j - 1] + 1), prev[j - 1] + cost))
        prev = cur
    return prev[lb]


def max_displacement(original, permuted):
    """Largest |new index - old index| when all words are distinct."""
    where = {w: i for i, w in enumerate(original)}
    return max((abs(where[w] - j) for j, w in enumerate(permuted)), default=0)


def dedup_oracle(pairs, normalized=False):
    """First occurrence wins, keyed on the full strings (no hashing)."""
    seen = set()
    out = []
    for s, t in pairs:
        key = (" ".join(s.lower().split()), " ".join(t.lower().split())) if normalized else (s, t)
        if key not in seen:
            seen.add(key)
            out.append((s, t))
    return out


def wc_words(path):
    """Whitespace-delimited word count, like ``wc -w``."""
    with open(path, "rb") as fh:
        return sum(len(line.split()) for line in fh)


def sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def pcg64_uniforms(seed, stream):
    """Generator of 53-bit uniforms from the raw PCG64 stream ``(seed, stream)``."""
    bitgen = np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))
    while True:
        yield (int(bitgen.random_raw()) >> 11) / 2.0**53


def noise_oracle(words, k, p_drop, p_mask, mask_token, seed, ordinal):
    """Drop, then mask, then permute, one uniform per word per step."""
    u = pcg64_uniforms(seed, ordinal)
    draws = [next(u) for _ in words]
    kept = [w for w, x in zip(words, draws) if x >= p_drop]
    if not kept and words:
        kept = [words[min(int(next(u) * len(words)), len(words) - 1)]]
    masked = [mask_token if next(u) < p_mask else w for w in kept]
    if len(masked) < 2:
        return masked
    scores = [i + next(u) * k for i in range(len(masked))]
    return [masked[i] for i in sorted(range(len(masked)), key=lambda i: scores[i])]
