"""Streaming readers, writers, deduplication and bookkeeping for sentence corpora.

Two on-disk layouts are supported:

* paired files, ``name.src`` / ``name.tgt``, one sentence per line;
* TSV, ``source<TAB>target`` per line. Cells never contain tabs: writers
  reject them instead of escaping, so the files stay greppable.

Everything is UTF-8 with LF line endings and no BOM. Readers decode line by
line so memory use does not depend on corpus size.
"""

from __future__ import annotations

import enum
import hashlib
import io
import itertools
import logging
import os
import sys
from array import array
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, Iterator, Optional, Sequence, Tuple, Union

from .errors import (
    LineBreakError,
    LineCountMismatch,
    TsvArityError,
    TsvCellError,
    Utf8Error,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

PAIRED = "paired"
TSV = "tsv"
FORMATS = (PAIRED, TSV)

STDIO = "-"


class Origin(str, enum.Enum):
    AUTHENTIC = "authentic"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True, slots=True)
class MonoSentence:
    text: str
    line_no: int


@dataclass(frozen=True, slots=True)
class SentencePair:
    source: str
    target: str
    origin: Origin = Origin.AUTHENTIC
    tags: Tuple[str, ...] = ()
    line_no: int = 0

    def __post_init__(self):
        if self.tags and self.origin is Origin.AUTHENTIC:
            raise ValueError("authentic pairs carry no tags")

    def with_text(self, source: str, target: str) -> "SentencePair":
        return SentencePair(source, target, self.origin, self.tags, self.line_no)


@dataclass
class CorpusStats:
    """Counts for one pass over a corpus.

    ``input_count`` is what entered the stage; ``pair_count`` is what left it.
    For a well-behaved stage ``pair_count == input_count - sum(drops) -
    duplicate_count`` (see :meth:`reconciles`).
    """

    pair_count: int = 0
    input_count: int = 0
    per_filter_drops: Dict[str, int] = field(default_factory=dict)
    per_filter_fixes: Dict[str, int] = field(default_factory=dict)
    drop_reasons: Dict[str, int] = field(default_factory=dict)
    duplicate_count: int = 0
    source_tokens: int = 0
    target_tokens: int = 0
    invalid_utf8_lines: int = 0

    def add_pair(self, pair: SentencePair) -> None:
        self.pair_count += 1
        self.source_tokens += len(pair.source.split())
        self.target_tokens += len(pair.target.split())

    def add_drop(self, filter_id: str, reason: str) -> None:
        self.per_filter_drops[filter_id] = self.per_filter_drops.get(filter_id, 0) + 1
        self.drop_reasons[reason] = self.drop_reasons.get(reason, 0) + 1

    def add_fix(self, filter_id: str) -> None:
        self.per_filter_fixes[filter_id] = self.per_filter_fixes.get(filter_id, 0) + 1

    @property
    def total_drops(self) -> int:
        return sum(self.per_filter_drops.values())

    def reconciles(self) -> bool:
        return self.pair_count == self.input_count - self.total_drops - self.duplicate_count

    def to_dict(self) -> dict:
        return {
            "pair_count": self.pair_count,
            "input_count": self.input_count,
            "per_filter_drops": dict(sorted(self.per_filter_drops.items())),
            "per_filter_fixes": dict(sorted(self.per_filter_fixes.items())),
            "drop_reasons": dict(sorted(self.drop_reasons.items())),
            "duplicate_count": self.duplicate_count,
            "source_tokens": self.source_tokens,
            "target_tokens": self.target_tokens,
            "invalid_utf8_lines": self.invalid_utf8_lines,
        }


# ---------------------------------------------------------------------------
# Reading


def _open_binary_in(path: PathLike) -> BinaryIO:
    if str(path) == STDIO:
        return sys.stdin.buffer
    return open(path, "rb")


def _clean_line(raw: bytes) -> bytes:
    if raw.endswith(b"\n"):
        raw = raw[:-1]
    if raw.endswith(b"\r"):
        raw = raw[:-1]
    return raw


class _LineDecoder:
    """Decodes lines of one file, counting (or rejecting) invalid UTF-8."""

    __slots__ = ("path", "strict", "invalid_lines")

    def __init__(self, path: PathLike, errors: str):
        if errors not in ("strict", "replace"):
            raise ValueError(f"errors must be 'strict' or 'replace', not {errors!r}")
        self.path = path
        self.strict = errors == "strict"
        self.invalid_lines = 0

    def decode(self, raw: bytes, line_no: int) -> str:
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            if self.strict:
                raise Utf8Error(self.path, line_no, exc.reason) from None
            self.invalid_lines += 1
            text = raw.decode("utf-8", "replace")
        if "\r" in text:
            text = text.replace("\r", " ")
        if line_no == 1 and text.startswith("\ufeff"):
            text = text[1:]
        return text


def _infer_format(target_path: Optional[PathLike], fmt: Optional[str]) -> str:
    if fmt is None:
        return PAIRED if target_path is not None else TSV
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {fmt!r}")
    if fmt == PAIRED and target_path is None:
        raise ValueError("paired format needs both a source and a target path")
    return fmt


class ParallelReader:
    """Iterable over the :class:`SentencePair` records of a corpus.

    After iteration, :attr:`invalid_utf8_lines` holds the number of lines
    that needed U+FFFD replacement (always 0 in strict mode, which raises).
    """

    def __init__(
        self,
        source_path: PathLike,
        target_path: Optional[PathLike] = None,
        *,
        fmt: Optional[str] = None,
        errors: str = "replace",
        origin: Origin = Origin.AUTHENTIC,
    ):
        self.fmt = _infer_format(target_path, fmt)
        self.source_path = source_path
        self.target_path = target_path
        self.errors = errors
        self.origin = Origin(origin)
        self._decoders: Tuple[_LineDecoder, ...] = ()

    @property
    def invalid_utf8_lines(self) -> int:
        return sum(d.invalid_lines for d in self._decoders)

    def __iter__(self) -> Iterator[SentencePair]:
        if self.fmt == TSV:
            return self._iter_tsv()
        return self._iter_paired()

    def _iter_tsv(self) -> Iterator[SentencePair]:
        dec = _LineDecoder(self.source_path, self.errors)
        self._decoders = (dec,)
        origin = self.origin
        fh = _open_binary_in(self.source_path)
        try:
            for line_no, raw in enumerate(fh, 1):
                cells = dec.decode(_clean_line(raw), line_no).split("\t")
                if len(cells) != 2:
                    raise TsvArityError(self.source_path, line_no, len(cells))
                yield SentencePair(cells[0], cells[1], origin, (), line_no)
        finally:
            if fh is not sys.stdin.buffer:
                fh.close()

    def _iter_paired(self) -> Iterator[SentencePair]:
        sdec = _LineDecoder(self.source_path, self.errors)
        tdec = _LineDecoder(self.target_path, self.errors)
        self._decoders = (sdec, tdec)
        origin = self.origin
        sfh = _open_binary_in(self.source_path)
        tfh = _open_binary_in(self.target_path)
        try:
            line_no = 0
            for sraw, traw in itertools.zip_longest(sfh, tfh):
                line_no += 1
                if sraw is None or traw is None:
                    short = self.source_path if sraw is None else self.target_path
                    raise LineCountMismatch(
                        f"{self.source_path} and {self.target_path} differ in length: "
                        f"{short} ends after {line_no - 1} lines"
                    )
                yield SentencePair(
                    sdec.decode(_clean_line(sraw), line_no),
                    tdec.decode(_clean_line(traw), line_no),
                    origin,
                    (),
                    line_no,
                )
        finally:
            for fh in (sfh, tfh):
                if fh is not sys.stdin.buffer:
                    fh.close()


def read_parallel(
    source_path: PathLike,
    target_path: Optional[PathLike] = None,
    *,
    fmt: Optional[str] = None,
    errors: str = "replace",
    origin: Origin = Origin.AUTHENTIC,
) -> ParallelReader:
    """Read a corpus as a stream of pairs, in file order.

    With one path the file is TSV; with two it is a paired-file corpus whose
    files must have equal line counts (:class:`LineCountMismatch` otherwise).
    ``errors`` is ``"replace"`` (U+FFFD, counted) or ``"strict"``
    (:class:`Utf8Error`).
    """
    return ParallelReader(source_path, target_path, fmt=fmt, errors=errors, origin=origin)


def read_mono(path: PathLike, *, errors: str = "replace") -> Iterator[MonoSentence]:
    dec = _LineDecoder(path, errors)
    fh = _open_binary_in(path)
    try:
        for line_no, raw in enumerate(fh, 1):
            yield MonoSentence(dec.decode(_clean_line(raw), line_no), line_no)
    finally:
        if fh is not sys.stdin.buffer:
            fh.close()


class IndexedCorpus(Sequence):
    """Random access to a corpus on disk through a table of line offsets.

    Only the offsets (8 bytes per line and file) are held in memory, which is
    what lets the mixer shuffle tens of millions of lines.
    """

    def __init__(
        self,
        source_path: PathLike,
        target_path: Optional[PathLike] = None,
        *,
        fmt: Optional[str] = None,
        origin: Origin = Origin.AUTHENTIC,
    ):
        self.fmt = _infer_format(target_path, fmt)
        self.origin = Origin(origin)
        self.paths = (source_path,) if self.fmt == TSV else (source_path, target_path)
        self._offsets = [self._index(p) for p in self.paths]
        if len(self._offsets) == 2 and len(self._offsets[0]) != len(self._offsets[1]):
            raise LineCountMismatch(
                f"{source_path} has {len(self._offsets[0])} lines, "
                f"{target_path} has {len(self._offsets[1])}"
            )
        self._handles = [open(p, "rb") for p in self.paths]

    @staticmethod
    def _index(path: PathLike) -> array:
        offsets = array("Q")
        pos = 0
        with open(path, "rb") as fh:
            for raw in fh:
                offsets.append(pos)
                pos += len(raw)
        return offsets

    def __len__(self) -> int:
        return len(self._offsets[0])

    def _line(self, which: int, index: int) -> str:
        fh = self._handles[which]
        fh.seek(self._offsets[which][index])
        return _clean_line(fh.readline()).decode("utf-8", "replace").replace("\r", " ")

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(index)
        if self.fmt == TSV:
            cells = self._line(0, index).split("\t")
            if len(cells) != 2:
                raise TsvArityError(self.paths[0], index + 1, len(cells))
            source, target = cells
        else:
            source, target = self._line(0, index), self._line(1, index)
        return SentencePair(source, target, self.origin, (), index + 1)

    def close(self) -> None:
        for fh in self._handles:
            fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# ---------------------------------------------------------------------------
# Writing


def _check_line(text: str, what: str) -> None:
    if "\n" in text or "\r" in text:
        raise LineBreakError(f"{what} contains a line break: {text[:60]!r}")


class _TextSink:
    def __init__(self, path: PathLike):
        self.path = path
        if str(path) == STDIO:
            self.fh = io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", newline="\n", write_through=True)
            self.owned = False
        else:
            try:
                self.fh = open(path, "w", encoding="utf-8", newline="\n")
            except OSError as exc:
                raise OSError(exc.errno, f"cannot write corpus: {exc.strerror}", str(path)) from exc
            self.owned = True

    def close(self) -> None:
        if self.owned:
            self.fh.close()
        else:
            self.fh.flush()
            self.fh.detach()


def write_corpus(
    pairs: Iterable[SentencePair],
    source_path: PathLike,
    target_path: Optional[PathLike] = None,
    *,
    fmt: Optional[str] = None,
) -> CorpusStats:
    """Write pairs one per line and return statistics of what was written."""
    fmt = _infer_format(target_path, fmt)
    stats = CorpusStats()
    sinks = [_TextSink(source_path)]
    try:
        if fmt == PAIRED:
            sinks.append(_TextSink(target_path))
            swrite, twrite = sinks[0].fh.write, sinks[1].fh.write
            for pair in pairs:
                _check_line(pair.source, "source")
                _check_line(pair.target, "target")
                swrite(pair.source + "\n")
                twrite(pair.target + "\n")
                stats.add_pair(pair)
        else:
            write = sinks[0].fh.write
            for pair in pairs:
                for cell in (pair.source, pair.target):
                    _check_line(cell, "TSV cell")
                    if "\t" in cell:
                        raise TsvCellError(f"line {stats.pair_count + 1}: TSV cell contains a tab: {cell[:60]!r}")
                write(f"{pair.source}\t{pair.target}\n")
                stats.add_pair(pair)
    finally:
        for sink in sinks:
            sink.close()
    stats.input_count = stats.pair_count
    return stats


def write_mono(lines: Iterable[str], path: PathLike) -> int:
    sink = _TextSink(path)
    n = 0
    try:
        for text in lines:
            _check_line(text, "sentence")
            sink.fh.write(text + "\n")
            n += 1
    finally:
        sink.close()
    return n


# ---------------------------------------------------------------------------
# Deduplication and statistics

EXACT_PAIR = "exact_pair"
NORMALIZED_PAIR = "normalized_pair"
KEY_MODES = (EXACT_PAIR, NORMALIZED_PAIR)


def _normalize_key_text(text: str) -> str:
    return " ".join(text.lower().split())


def pair_key(pair: SentencePair, key_mode: str = EXACT_PAIR) -> bytes:
    """128-bit key of a pair.

    The source is length-prefixed so that no choice of separator character
    can make two different pairs collide by construction.
    """
    source, target = pair.source, pair.target
    if key_mode == NORMALIZED_PAIR:
        source, target = _normalize_key_text(source), _normalize_key_text(target)
    elif key_mode != EXACT_PAIR:
        raise ValueError(f"unknown key mode {key_mode!r}")
    h = hashlib.blake2b(digest_size=16)
    sb = source.encode("utf-8", "surrogatepass")
    h.update(len(sb).to_bytes(8, "little"))
    h.update(sb)
    h.update(target.encode("utf-8", "surrogatepass"))
    return h.digest()


class Deduplicator:
    """Keeps the first occurrence of every key; remembers only key digests."""

    def __init__(self, key_mode: str = EXACT_PAIR):
        if key_mode not in KEY_MODES:
            raise ValueError(f"unknown key mode {key_mode!r}")
        self.key_mode = key_mode
        self.seen: set = set()
        self.duplicates = 0

    def is_new(self, pair: SentencePair) -> bool:
        key = pair_key(pair, self.key_mode)
        if key in self.seen:
            self.duplicates += 1
            return False
        self.seen.add(key)
        return True

    def __call__(self, pairs: Iterable[SentencePair]) -> Iterator[SentencePair]:
        is_new = self.is_new
        for pair in pairs:
            if is_new(pair):
                yield pair


def deduplicate(pairs: Iterable[SentencePair], key_mode: str = EXACT_PAIR) -> Iterator[SentencePair]:
    return Deduplicator(key_mode)(pairs)


def compute_stats(pairs: Iterable[SentencePair]) -> CorpusStats:
    stats = CorpusStats()
    for pair in pairs:
        stats.add_pair(pair)
    stats.input_count = stats.pair_count
    return stats


def count_through(pairs: Iterable[SentencePair], stats: CorpusStats) -> Iterator[SentencePair]:
    """Pass pairs through unchanged, counting them as stage input."""
    for pair in pairs:
        stats.input_count += 1
        yield pair


def file_sha256(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def paired_paths(prefix: PathLike) -> Tuple[Path, Path]:
    prefix = Path(prefix)
    return prefix.with_name(prefix.name + ".src"), prefix.with_name(prefix.name + ".tgt")
