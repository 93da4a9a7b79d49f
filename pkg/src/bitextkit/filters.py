"""Heuristic bitext filters.

Every filter looks at one sentence pair and returns a :class:`FilterVerdict`:
keep it, drop it (with a machine-readable reason code) or fix it (with the
rewritten texts). Filters are chained in a configurable order; fixes rewrite
the pair seen by later filters and the first drop ends the chain. A drop
always removes both sides so the corpus stays aligned.

For bulk work build a :class:`FilterChain` once and call :meth:`FilterChain.run`;
the per-filter functions below are convenient for single pairs and tests.
"""

from __future__ import annotations

import enum
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from rapidfuzz.distance import Levenshtein as _rf_levenshtein

from .corpus_io import CorpusStats, SentencePair
from .errors import UnknownFilterId, ValidationError

logger = logging.getLogger(__name__)


class Action(str, enum.Enum):
    KEEP = "keep"
    DROP = "drop"
    FIX = "fix"


@dataclass(frozen=True, slots=True)
class FilterVerdict:
    filter_id: str
    action: Action
    reason: Optional[str] = None
    source: Optional[str] = None
    target: Optional[str] = None

    @property
    def kept(self) -> bool:
        return self.action is not Action.DROP


@dataclass(frozen=True, slots=True)
class TextVerdict:
    """Outcome of a single-text repair: unchanged, rewritten, or unusable."""

    action: Action
    text: str


# ---------------------------------------------------------------------------
# Character sets

BASIC_LATIN = "".join(chr(c) for c in range(0x20, 0x7F))
ICELANDIC_LETTERS = "áéíóúýþæöðÁÉÍÓÚÝÞÆÖÐ"
COMMON_PUNCTUATION = "„“”‘’–—…«»°§€£"

CHARSET_PRESETS: Dict[str, str] = {
    "en": BASIC_LATIN + COMMON_PUNCTUATION,
    "is": BASIC_LATIN + ICELANDIC_LETTERS + COMMON_PUNCTUATION,
}


def charset_from_preset(name: str, extra: str = "") -> frozenset:
    try:
        return frozenset(CHARSET_PRESETS[name] + extra)
    except KeyError:
        raise ValidationError("charset", f"unknown preset {name!r} (known: {', '.join(CHARSET_PRESETS)})") from None


# ---------------------------------------------------------------------------
# Encoding repair

# Characters whose UTF-8 bytes are commonly misread as Latin-1 or cp1252.
_MOJIBAKE_COVERED = ICELANDIC_LETTERS + "äüåøÄÜÅØ" + "„“”‘’–—…" + "°§«»´·\u00a0"


def _unescape(text: str) -> str:
    return re.sub(
        r"\\(x[0-9a-fA-F]{2}|u[0-9a-fA-F]{4}|U[0-9a-fA-F]{8}|t|\\)",
        lambda m: "\t" if m.group(1) == "t" else "\\" if m.group(1) == "\\" else chr(int(m.group(1)[1:], 16)),
        text,
    )


def _read_table_file(path: Union[str, Path], unescape: bool) -> List[Tuple[str, str]]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValidationError(f"{path}:{line_no}", "expected pattern<TAB>replacement")
            if unescape:
                parts = [_unescape(p) for p in parts]
            entries.append((parts[0], parts[1]))
    return entries


def default_mojibake_entries() -> List[Tuple[str, str]]:
    """UTF-8-read-as-Latin-1/cp1252 sequences for Icelandic letters and punctuation."""
    table = {}
    for ch in _MOJIBAKE_COVERED:
        raw = ch.encode("utf-8")
        for codec in ("latin-1", "cp1252"):
            try:
                garbled = raw.decode(codec)
            except UnicodeDecodeError:
                continue
            if garbled != ch:
                table[garbled] = ch
    return sorted(table.items(), key=lambda kv: (-len(kv[0]), kv[0]))


# Up to this many candidate characters, repeated substring search is several
# times cheaper than a regular-expression scan.
_LEAD_CHECK_MAX = 12


def _may_match(leads: Optional[Tuple[str, ...]], detect: Optional["re.Pattern"], text: str) -> bool:
    if leads is not None:
        for c in leads:
            if c in text:
                return True
        return False
    return detect is not None and detect.search(text) is not None


class MojibakeTable:
    """Ordered literal replacements, applied until nothing changes.

    Iterating to a fixed point makes :meth:`fix` idempotent even when one
    replacement completes another garbled sequence.
    """

    MAX_ROUNDS = 8

    def __init__(self, entries: Iterable[Tuple[str, str]]):
        self.entries = tuple((str(p), str(r)) for p, r in entries)
        for pattern, _ in self.entries:
            if not pattern:
                raise ValidationError("filter.mojibake_table", "empty pattern")
        alternatives = [re.escape(p) for p, _ in self.entries] + ["\ufffd"]
        self._detect = re.compile("|".join(alternatives))
        self._ascii_safe = all(not p.isascii() for p, _ in self.entries)
        # every pattern starts with one of these, so their absence rules it out
        leads = {p[0] for p, _ in self.entries} | {"\ufffd"}
        self._leads = tuple(sorted(leads)) if len(leads) <= _LEAD_CHECK_MAX else None

    def may_match(self, text: str) -> bool:
        """False only if no entry (and no U+FFFD) can occur in ``text``."""
        return _may_match(self._leads, self._detect, text)

    @classmethod
    def default(cls) -> "MojibakeTable":
        return cls(default_mojibake_entries())

    @classmethod
    def from_file(cls, path) -> "MojibakeTable":
        return cls(_read_table_file(path, unescape=True))

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, MojibakeTable) and self.entries == other.entries

    def fix(self, text: str) -> TextVerdict:
        if (self._ascii_safe and text.isascii()) or not self.may_match(text):
            return TextVerdict(Action.KEEP, text)
        fixed = text
        for _ in range(self.MAX_ROUNDS):
            before = fixed
            for pattern, replacement in self.entries:
                if pattern in fixed:
                    fixed = fixed.replace(pattern, replacement)
            if fixed == before:
                break
        if "\ufffd" in fixed:
            return TextVerdict(Action.DROP, fixed)
        if fixed == text:
            return TextVerdict(Action.KEEP, text)
        return TextVerdict(Action.FIX, fixed)


def fix_encoding(text: str, mojibake_table: Union[MojibakeTable, Iterable[Tuple[str, str]], None] = None) -> TextVerdict:
    """Repair mis-decoded UTF-8; drop text that still holds U+FFFD afterwards."""
    if mojibake_table is None:
        mojibake_table = _DEFAULT_MOJIBAKE
    elif not isinstance(mojibake_table, MojibakeTable):
        mojibake_table = MojibakeTable(mojibake_table)
    return mojibake_table.fix(text)


_DEFAULT_MOJIBAKE = MojibakeTable.default()


# ---------------------------------------------------------------------------
# Ad-hoc regular expression fixes (PDF/OCR debris)

_ACUTE_VOWELS = {"a": "á", "e": "é", "i": "í", "o": "ó", "u": "ú", "y": "ý"}


def default_regex_fixes() -> List[Tuple[str, str]]:
    """Starter rules: ligatures, soft hyphens and detached accents from PDF text."""
    rules = [
        ("ﬀ", "ff"),
        ("ﬁ", "fi"),
        ("ﬂ", "fl"),
        ("ﬃ", "ffi"),
        ("ﬄ", "ffl"),
        ("\u00ad", ""),
    ]
    for base, accented in _ACUTE_VOWELS.items():
        for b, a in ((base, accented), (base.upper(), accented.upper())):
            rules.append((f"´{b}", a))
            rules.append((f"{b}\u0301", a))
    rules += [("o\u0308", "ö"), ("O\u0308", "Ö")]
    return rules


class RegexFixes:
    """Ordered regular-expression rewrites; rewritten text is whitespace-collapsed."""

    def __init__(self, entries: Iterable[Tuple[str, str]]):
        self.entries = tuple((str(p), str(r)) for p, r in entries)
        try:
            self._compiled = [(re.compile(p), r) for p, r in self.entries]
            self._detect = self._detector([p for p, _ in self.entries])
        except re.error as exc:
            raise ValidationError("filter.custom_regex_fixes", f"bad regular expression: {exc}") from None
        literal = all(re.escape(p) == p for p, _ in self.entries)
        leads = {next((c for c in p if not c.isascii()), p[:1]) for p, _ in self.entries}
        self._leads = tuple(sorted(leads)) if literal and self.entries and len(leads) <= _LEAD_CHECK_MAX else None

    def may_match(self, text: str) -> bool:
        """False only if no rewrite can apply to ``text``."""
        return _may_match(self._leads, self._detect, text)

    @staticmethod
    def _detector(patterns):
        """A fast pre-check that matches wherever any pattern could match.

        A literal pattern can only match where its rarest character occurs
        (taken to be its first non-ASCII one); a character class search is far
        cheaper than a many-way alternation.
        """
        if not patterns:
            return None
        firsts = {next((c for c in p if not c.isascii()), p[0]) for p in patterns if re.escape(p) == p}
        others = [p for p in patterns if re.escape(p) != p]
        parts = []
        if firsts:
            parts.append("[" + re.escape("".join(sorted(firsts))) + "]")
        parts += [f"(?:{p})" for p in others]
        return re.compile("|".join(parts))

    @classmethod
    def from_file(cls, path) -> "RegexFixes":
        return cls(_read_table_file(path, unescape=False))

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, RegexFixes) and self.entries == other.entries

    def apply(self, text: str) -> str:
        if not self.may_match(text):
            return text
        fixed = text
        for rx, repl in self._compiled:
            fixed = rx.sub(repl, fixed)
        # A rewrite may leave double or stray spaces behind.
        return text if fixed == text else " ".join(fixed.split())


# ---------------------------------------------------------------------------
# Punctuation normalisation

_PUNCT_MAP = {
    **{c: '"' for c in "“”„‟«»″"},
    **{c: "'" for c in "‘’‚‛′‹›"},
    "…": "...",
    **{c: " " for c in "\u00a0\u1680\u2000\u2001\u2002\u2003\u2004\u2005\u2006\u2007\u2008\u2009\u200a\u202f\u205f\u3000"},
    **{c: None for c in "\u200b\u200c\u200d\u2060\ufeff"},
}
_DASH_MAP = {c: "-" for c in "‐‑‒–—―−"}
_TRANSLATE = {
    True: str.maketrans({**_PUNCT_MAP, **_DASH_MAP}),
    False: str.maketrans(_PUNCT_MAP),
}


# Every str.isspace() character other than the plain space.
_ODD_WHITESPACE = "\t\n\x0b\x0c\r\x1c\x1d\x1e\x1f\x85\u00a0\u1680\u2000-\u200a\u2028\u2029\u202f\u205f\u3000"
_NEEDS_WORK = {
    dashes: re.compile(
        "[" + _ODD_WHITESPACE + re.escape("".join(_PUNCT_MAP) + ("".join(_DASH_MAP) if dashes else "")) + "]"
    ).search
    for dashes in (True, False)
}


def normalize_punctuation(text: str, dashes: bool = True) -> str:
    """Map typographic variants to ASCII and collapse whitespace runs.

    Curly quotes become straight, the ellipsis character becomes ``...``,
    exotic spaces become a space and zero-width characters vanish. Dashes
    become ``-`` unless ``dashes`` is false. Idempotent.
    """
    if (
        # printable ASCII holds no mapped character and no odd whitespace
        ((text.isascii() and text.isprintable()) or _NEEDS_WORK[dashes](text) is None)
        and "  " not in text
        and text[:1] != " "
        and text[-1:] != " "
    ):
        return text
    return " ".join(text.translate(_TRANSLATE[dashes]).split())


# ---------------------------------------------------------------------------
# Edit distance


def levenshtein(a: str, b: str, max_distance: Optional[int] = None) -> int:
    """Unit-cost edit distance over codepoints.

    With ``max_distance`` the computation may stop early and return
    ``max_distance + 1`` for anything farther apart.
    """
    if max_distance is None:
        return _rf_levenshtein.distance(a, b)
    return _rf_levenshtein.distance(a, b, score_cutoff=max_distance)


# ---------------------------------------------------------------------------
# Configuration

FILTER_IDS = (
    "fix_encoding",
    "normalize_punctuation",
    "regex_fix",
    "empty",
    "length",
    "charset",
    "case_symbol",
    "edit_distance",
)
DEFAULT_CHAIN = FILTER_IDS


@dataclass(frozen=True)
class FilterConfig:
    min_chars: int = 1
    max_chars: int = 1000
    max_tokens: int = 250
    length_ratio_max: float = 9.0
    charset_source: frozenset = field(default_factory=lambda: charset_from_preset("en"))
    charset_target: frozenset = field(default_factory=lambda: charset_from_preset("is"))
    charset_tolerance: float = 0.0
    edit_distance_min_normalized: float = 0.3
    symbol_slack: int = 2
    normalize_dashes: bool = True
    mojibake_table: MojibakeTable = field(default_factory=lambda: _DEFAULT_MOJIBAKE)
    custom_regex_fixes: RegexFixes = field(default_factory=lambda: RegexFixes(default_regex_fixes()))
    chain: Tuple[str, ...] = DEFAULT_CHAIN

    def __post_init__(self):
        if not isinstance(self.mojibake_table, MojibakeTable):
            object.__setattr__(self, "mojibake_table", MojibakeTable(self.mojibake_table))
        if not isinstance(self.custom_regex_fixes, RegexFixes):
            object.__setattr__(self, "custom_regex_fixes", RegexFixes(self.custom_regex_fixes))
        object.__setattr__(self, "chain", tuple(self.chain))
        object.__setattr__(self, "charset_source", frozenset(self.charset_source))
        object.__setattr__(self, "charset_target", frozenset(self.charset_target))
        if self.min_chars < 0:
            raise ValidationError("filter.min_chars", "must be >= 0")
        if self.min_chars > self.max_chars:
            raise ValidationError("filter.min_chars", "must not exceed max_chars")
        if self.max_tokens < 1:
            raise ValidationError("filter.max_tokens", "must be >= 1")
        if not self.length_ratio_max >= 1:
            raise ValidationError("filter.length_ratio_max", "must be >= 1")
        if not 0 <= self.edit_distance_min_normalized <= 1:
            raise ValidationError("filter.edit_distance_min_normalized", "must lie in [0, 1]")
        if not 0 <= self.charset_tolerance < 1:
            raise ValidationError("filter.charset_tolerance", "must lie in [0, 1)")
        if self.symbol_slack < 0:
            raise ValidationError("filter.symbol_slack", "must be >= 0")
        if not self.chain:
            raise ValidationError("filter.chain", "must name at least one filter")
        for fid in self.chain:
            if fid not in FILTER_IDS:
                raise UnknownFilterId(fid)

    def with_chain(self, chain: Sequence[str]) -> "FilterConfig":
        return replace(self, chain=tuple(chain))


DEFAULT_CONFIG = FilterConfig()


# ---------------------------------------------------------------------------
# Step builders.
#
# Each returns fn(source, target) -> None (keep) | str (drop reason)
# | (source, target) (fix).

StepResult = Union[None, str, Tuple[str, str]]
Step = Callable[[str, str], StepResult]


def _step_fix_encoding(cfg: FilterConfig, normalized: bool = False) -> Step:
    table = cfg.mojibake_table
    fix, maybe, ascii_safe = table.fix, table.may_match, table._ascii_safe
    keep, drop = Action.KEEP, Action.DROP

    def step(s, t):
        if ascii_safe:
            if (s.isascii() or not maybe(s)) and (t.isascii() or not maybe(t)):
                return None
        vs = fix(s)
        vt = fix(t)
        if vs.action is drop:
            return "encoding_source"
        if vt.action is drop:
            return "encoding_target"
        if vs.action is keep and vt.action is keep:
            return None
        return vs.text, vt.text

    return step


def _step_normalize_punctuation(cfg: FilterConfig, normalized: bool = False) -> Step:
    dashes = cfg.normalize_dashes

    def step(s, t):
        ns = normalize_punctuation(s, dashes)
        nt = normalize_punctuation(t, dashes)
        if ns == s and nt == t:
            return None
        return ns, nt

    return step


def _step_regex_fix(cfg: FilterConfig, normalized: bool = False) -> Step:
    fixes = cfg.custom_regex_fixes
    if fixes._detect is None:
        return lambda s, t: None
    apply, maybe = fixes.apply, fixes.may_match

    def step(s, t):
        if not maybe(s) and not maybe(t):
            return None
        ns, nt = apply(s), apply(t)
        if ns == s and nt == t:
            return None
        return ns, nt

    return step


def _step_empty(cfg: FilterConfig, normalized: bool = False) -> Step:
    def step(s, t):
        if not s or s.isspace():
            return "empty_source"
        if not t or t.isspace():
            return "empty_target"
        return None

    return step


def _step_length(cfg: FilterConfig, normalized: bool = False) -> Step:
    min_chars, max_chars, max_tokens = cfg.min_chars, cfg.max_chars, cfg.max_tokens
    ratio_max = cfg.length_ratio_max
    count_tokens = _normalized_token_count if normalized else _token_count

    def step(s, t):
        for text, side in ((s, "source"), (t, "target")):
            n = len(text)
            if n < min_chars:
                return "too_short_" + side
            if n > max_chars:
                return "too_long_" + side
        ns, nt = count_tokens(s), count_tokens(t)
        if ns > max_tokens:
            return "too_many_tokens_source"
        if nt > max_tokens:
            return "too_many_tokens_target"
        lo, hi = (ns, nt) if ns <= nt else (nt, ns)
        if lo == 0:
            return "length_ratio" if hi else None
        if hi / lo > ratio_max:
            return "length_ratio"
        return None

    return step


def _token_count(text: str) -> int:
    return len(text.split())


def _normalized_token_count(text: str) -> int:
    # Valid once whitespace has been collapsed to single inner spaces.
    return text.count(" ") + 1 if text else 0


def _charset_regex(allowed: frozenset) -> "re.Pattern":
    body = "".join(re.escape(c) for c in sorted(allowed))
    return re.compile(f"[^{body}]") if body else re.compile(r"[\s\S]")


def _step_charset(cfg: FilterConfig, normalized: bool = False) -> Step:
    bad_s = _charset_regex(cfg.charset_source).search
    bad_t = _charset_regex(cfg.charset_target).search
    ascii_s = _PRINTABLE_ASCII <= cfg.charset_source
    ascii_t = _PRINTABLE_ASCII <= cfg.charset_target
    tol = cfg.charset_tolerance

    if tol == 0:

        def step(s, t):
            if not (ascii_s and s.isascii() and s.isprintable()) and bad_s(s) is not None:
                return "charset_source"
            if not (ascii_t and t.isascii() and t.isprintable()) and bad_t(t) is not None:
                return "charset_target"
            return None

    else:
        find_s = _charset_regex(cfg.charset_source).findall
        find_t = _charset_regex(cfg.charset_target).findall

        def step(s, t):
            if s and len(find_s(s)) / len(s) > tol:
                return "charset_source"
            if t and len(find_t(t)) / len(t) > tol:
                return "charset_target"
            return None

    return step


_PRINTABLE_ASCII = frozenset(BASIC_LATIN)
_MISMATCH_SYMBOLS = ".!?()[]{}\"«»„“”"
_DIGITS_OR_SYMBOLS = re.compile("[0-9" + re.escape(_MISMATCH_SYMBOLS) + "]").findall
_ALL_CAPS_MIN_LETTERS = 4
# "1,000" (English) and "1.000" (Icelandic) are the same number
_DIGIT_GROUPING = re.compile(r"(?<=[0-9])[.,](?=[0-9]{3}(?![0-9]))")
_NUMBER = re.compile(r"[0-9]+").findall
_DIGIT_SET = frozenset("0123456789")


def numbers(text: str) -> List[str]:
    """Digit runs of ``text``, sorted, with thousands separators removed."""
    return sorted(_NUMBER(_DIGIT_GROUPING.sub("", text)))


def _step_case_symbol(cfg: FilterConfig, normalized: bool = False) -> Step:
    slack = cfg.symbol_slack
    marks = _DIGITS_OR_SYMBOLS

    def step(s, t):
        ms, mt = marks(s), marks(t)
        # Identical mark sequences mean equal symbol counts; digits still
        # need grouping into numbers ("38 9" vs "3 89").
        if ms != mt:
            ds = [c for c in ms if c in _DIGIT_SET]
            dt = [c for c in mt if c in _DIGIT_SET]
            if ds or dt:
                # different digits imply different numbers; equal digits
                # may still group differently
                if len(ds) != len(dt) or sorted(ds) != sorted(dt) or numbers(s) != numbers(t):
                    return "digit_mismatch"
            if abs((len(ms) - len(ds)) - (len(mt) - len(dt))) > slack:
                return "symbol_mismatch"
        elif any(c in _DIGIT_SET for c in ms) and numbers(s) != numbers(t):
            return "digit_mismatch"
        us, ut = s.isupper(), t.isupper()
        if us != ut and sum(c.isalpha() for c in (s if us else t)) >= _ALL_CAPS_MIN_LETTERS:
            return "case_mismatch"
        return None

    return step


def _step_edit_distance(cfg: FilterConfig, normalized: bool = False) -> Step:
    threshold = cfg.edit_distance_min_normalized
    distance = _rf_levenshtein.distance

    def step(s, t):
        longest = max(len(s), len(t))
        if longest == 0 or threshold == 0:
            return None
        limit = math.ceil(threshold * longest)
        if abs(len(s) - len(t)) > limit:
            return None
        d = distance(s, t, score_cutoff=limit)
        if d / longest < threshold:
            return "near_copy"
        return None

    return step


_BUILDERS: Dict[str, Callable[[FilterConfig], Step]] = {
    "fix_encoding": _step_fix_encoding,
    "normalize_punctuation": _step_normalize_punctuation,
    "regex_fix": _step_regex_fix,
    "empty": _step_empty,
    "length": _step_length,
    "charset": _step_charset,
    "case_symbol": _step_case_symbol,
    "edit_distance": _step_edit_distance,
}


def _as_verdict(filter_id: str, result: StepResult) -> FilterVerdict:
    if result is None:
        return FilterVerdict(filter_id, Action.KEEP)
    if isinstance(result, str):
        return FilterVerdict(filter_id, Action.DROP, result)
    return FilterVerdict(filter_id, Action.FIX, None, result[0], result[1])


# ---------------------------------------------------------------------------
# Public single-pair filters


def filter_empty(pair: SentencePair) -> FilterVerdict:
    return _as_verdict("empty", _step_empty(DEFAULT_CONFIG)(pair.source, pair.target))


def filter_length(pair: SentencePair, config: FilterConfig = DEFAULT_CONFIG) -> FilterVerdict:
    return _as_verdict("length", _step_length(config)(pair.source, pair.target))


def filter_charset(pair: SentencePair, config: FilterConfig = DEFAULT_CONFIG) -> FilterVerdict:
    return _as_verdict("charset", _step_charset(config)(pair.source, pair.target))


def filter_case_symbol_mismatch(pair: SentencePair, config: FilterConfig = DEFAULT_CONFIG) -> FilterVerdict:
    return _as_verdict("case_symbol", _step_case_symbol(config)(pair.source, pair.target))


def filter_edit_distance(pair: SentencePair, config: FilterConfig = DEFAULT_CONFIG) -> FilterVerdict:
    return _as_verdict("edit_distance", _step_edit_distance(config)(pair.source, pair.target))


# ---------------------------------------------------------------------------
# Chains

CHAIN_ID = "chain"


class FilterChain:
    """A compiled, immutable filter chain."""

    def __init__(self, config: FilterConfig = DEFAULT_CONFIG, filter_ids: Optional[Sequence[str]] = None):
        ids = tuple(filter_ids) if filter_ids is not None else config.chain
        if not ids:
            raise ValidationError("filter.chain", "must name at least one filter")
        for fid in ids:
            if fid not in _BUILDERS:
                raise UnknownFilterId(fid)
        self.config = config
        self.filter_ids = ids
        # Steps after normalize_punctuation see whitespace-collapsed text,
        # provided no later fix can reintroduce irregular spacing.
        self._steps = []
        normalized = False
        for fid in ids:
            self._steps.append((fid, _BUILDERS[fid](config, normalized)))
            if fid == "normalize_punctuation":
                normalized = True
            elif fid == "fix_encoding":
                normalized = False
        self.normalizes = normalized
        self._keeps = {fid: FilterVerdict(fid, Action.KEEP) for fid in ids}
        self._final_keep = FilterVerdict(CHAIN_ID, Action.KEEP)

    def apply(self, pair: SentencePair) -> Tuple[FilterVerdict, List[FilterVerdict]]:
        """Run the chain on one pair; returns (final verdict, audit trail)."""
        s, t = pair.source, pair.target
        trail = []
        fixed = False
        for fid, step in self._steps:
            result = step(s, t)
            if result is None:
                trail.append(self._keeps[fid])
            elif result.__class__ is str:
                verdict = FilterVerdict(fid, Action.DROP, result)
                trail.append(verdict)
                return verdict, trail
            else:
                s, t = result
                fixed = True
                trail.append(FilterVerdict(fid, Action.FIX, None, s, t))
        if fixed:
            return FilterVerdict(CHAIN_ID, Action.FIX, None, s, t), trail
        return self._final_keep, trail

    def run(
        self,
        pairs: Iterable[SentencePair],
        stats: Optional[CorpusStats] = None,
        rejects: Optional[Callable[[SentencePair, FilterVerdict], None]] = None,
    ) -> Iterator[SentencePair]:
        """Stream surviving (possibly rewritten) pairs in input order.

        ``stats`` receives input, drop, fix and output counts; ``rejects`` is
        called with every dropped pair and its verdict.
        """
        if stats is None:
            stats = CorpusStats()
        steps = self._steps
        normalizes = self.normalizes
        # plain locals in the hot loop; folded into ``stats`` on exit
        n_in = n_out = src_tokens = tgt_tokens = 0
        try:
            for pair in pairs:
                n_in += 1
                s, t = pair.source, pair.target
                changed = False
                for fid, step in steps:
                    result = step(s, t)
                    if result is None:
                        continue
                    if result.__class__ is str:
                        stats.add_drop(fid, result)
                        if rejects is not None:
                            rejects(pair, FilterVerdict(fid, Action.DROP, result))
                        break
                    s, t = result
                    changed = True
                    stats.add_fix(fid)
                else:
                    n_out += 1
                    if normalizes:
                        src_tokens += s.count(" ") + 1 if s else 0
                        tgt_tokens += t.count(" ") + 1 if t else 0
                    else:
                        src_tokens += len(s.split())
                        tgt_tokens += len(t.split())
                    yield pair.with_text(s, t) if changed else pair
        finally:
            stats.input_count += n_in
            stats.pair_count += n_out
            stats.source_tokens += src_tokens
            stats.target_tokens += tgt_tokens


def apply_filter_chain(
    pair: SentencePair,
    filters: Optional[Sequence[str]] = None,
    config: FilterConfig = DEFAULT_CONFIG,
) -> Tuple[FilterVerdict, List[FilterVerdict]]:
    """Run ``filters`` (default: ``config.chain``) over one pair."""
    return FilterChain(config, filters).apply(pair)


def _chunk_worker(args):
    config, ids, chunk = args
    chain = FilterChain(config, ids)
    out = []
    for pair in chunk:
        final, trail = chain.apply(pair)
        out.append((final, tuple(v.filter_id for v in trail if v.action is Action.FIX)))
    return out


def run_parallel(
    chain: FilterChain,
    pairs: Iterable[SentencePair],
    processes: int,
    stats: Optional[CorpusStats] = None,
    chunk_size: int = 20000,
    rejects: Optional[Callable[[SentencePair, FilterVerdict], None]] = None,
) -> Iterator[SentencePair]:
    """Like :meth:`FilterChain.run` but evaluates chunks in worker processes.

    At most ``2 * processes`` chunks are in flight. Output order and counts
    are identical to the sequential run.
    """
    import itertools
    from multiprocessing import Pool

    if stats is None:
        stats = CorpusStats()
    it = iter(pairs)
    with Pool(processes) as pool:
        while True:
            window = [list(itertools.islice(it, chunk_size)) for _ in range(2 * processes)]
            window = [c for c in window if c]
            if not window:
                return
            results = pool.map(_chunk_worker, [(chain.config, chain.filter_ids, c) for c in window])
            for chunk, verdicts in zip(window, results):
                for pair, (verdict, fixes) in zip(chunk, verdicts):
                    stats.input_count += 1
                    # a fix counts even when a later filter drops the pair
                    for fid in fixes:
                        stats.add_fix(fid)
                    if verdict.action is Action.DROP:
                        stats.add_drop(verdict.filter_id, verdict.reason)
                        if rejects is not None:
                            rejects(pair, verdict)
                        continue
                    out = pair
                    if verdict.action is Action.FIX:
                        out = pair.with_text(verdict.source, verdict.target)
                    stats.add_pair(out)
                    yield out
