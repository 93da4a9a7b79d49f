"""Command-line interface.

    bitextkit filter   -s train.en -t train.is -o clean.en --out-target clean.is
    bitextkit dedup    -s corpus.tsv -o -
    bitextkit noise    -i synthetic.en -o noised.en --seed 1
    bitextkit tag      -s synthetic.en -t synthetic.is -o tagged.en --out-target tagged.is
    bitextkit mix      --authentic-source a.en --authentic-target a.is \\
                       --synthetic-source s.en --synthetic-target s.is -o mix.en --out-target mix.is
    bitextkit bt-run   --config pipeline.toml
    bitextkit bleu     --hyp out.is --ref ref.is --lang en-is
    bitextkit stats    -s train.en -t train.is
    bitextkit validate-config pipeline.toml

A path of ``-`` means stdin or stdout. With a single input file the corpus is
read as TSV. Exit codes: 0 success, 1 data or I/O error, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence

from . import __version__
from .augment import MIX_MODES, MixSpec, TagSpec, mix_corpora, tag_synthetic
from .bleu import bleu, signature
from .bt_loop import run_loop
from .config import TMPDIR_ENV, PipelineConfig, check_input_paths, load_config
from .corpus_io import (
    KEY_MODES,
    STDIO,
    CorpusStats,
    Deduplicator,
    IndexedCorpus,
    Origin,
    ParallelReader,
    SentencePair,
    file_sha256,
    read_mono,
    read_parallel,
    write_corpus,
    write_mono,
)
from .errors import BitextError, ConfigError, ValidationError
from .filters import FILTER_IDS, FilterChain, FilterVerdict, run_parallel
from .noising import NoiseConfig, noise_sentence

logger = logging.getLogger("bitextkit")


# ---------------------------------------------------------------------------
# Reports


class RunReport:
    """Per-stage statistics, timings, file hashes and a config snapshot."""

    def __init__(self, config: Optional[dict] = None):
        self.stages: List[dict] = []
        self.inputs: Dict[str, str] = {}
        self.outputs: Dict[str, str] = {}
        self.config = config

    def add_stage(self, name: str, stats: CorpusStats, seconds: float, **extra) -> None:
        entry = {"stage": name, "stats": stats.to_dict(), "seconds": round(seconds, 6), "reconciles": stats.reconciles()}
        entry.update(extra)
        self.stages.append(entry)

    def hash_files(self, inputs: Iterable, outputs: Iterable) -> None:
        for target, paths in ((self.inputs, inputs), (self.outputs, outputs)):
            for p in paths:
                if p is not None and str(p) != STDIO and Path(p).is_file():
                    target[str(p)] = file_sha256(p)

    def to_dict(self) -> dict:
        out = {"stages": self.stages, "inputs": self.inputs, "outputs": self.outputs}
        if self.config is not None:
            out["config"] = self.config
        return out

    def table(self) -> str:
        rows = []
        if self.stages:
            first = self.stages[0]["stats"]
            rows.append(("input", first["input_count"], ""))
        for st in self.stages:
            s = st["stats"]
            note = []
            if s["per_filter_drops"]:
                note.append(f"dropped {sum(s['per_filter_drops'].values()):,}")
            if s["duplicate_count"]:
                note.append(f"duplicates {s['duplicate_count']:,}")
            if s["invalid_utf8_lines"]:
                note.append(f"invalid UTF-8 lines {s['invalid_utf8_lines']:,}")
            rows.append((st["stage"], s["pair_count"], ", ".join(note)))
            for fid, n in s["per_filter_drops"].items():
                rows.append((f"  - {fid}", n, ""))
            for fid, n in s["per_filter_fixes"].items():
                rows.append((f"  ~ {fid} (fixed)", n, ""))
        width = max([len(r[0]) for r in rows] + [5])
        lines = [f"{'Stage':<{width}}  {'#Sentences':>12}", "-" * (width + 14)]
        for name, n, note in rows:
            lines.append(f"{name:<{width}}  {n:>12,}" + (f"  {note}" if note else ""))
        return "\n".join(lines)


def _emit_report(report: RunReport, path: Optional[str], quiet: bool) -> None:
    if path:
        payload = json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        if path == STDIO:
            sys.stdout.write(payload)
        else:
            Path(path).write_text(payload, encoding="utf-8")
    if not quiet:
        print(report.table(), file=sys.stderr)


# ---------------------------------------------------------------------------
# Helpers


def _tmpdir() -> Optional[str]:
    return os.environ.get(TMPDIR_ENV) or None


@contextlib.contextmanager
def _seekable(*paths: Optional[str]):
    """Spool ``-`` inputs into temporary files so they can be indexed."""
    tmp = None
    out = []
    try:
        for p in paths:
            if p == STDIO:
                if tmp is None:
                    tmp = tempfile.mkdtemp(prefix="bitextkit-", dir=_tmpdir())
                spooled = os.path.join(tmp, f"stdin{len(out)}")
                with open(spooled, "wb") as fh:
                    shutil.copyfileobj(sys.stdin.buffer, fh)
                out.append(spooled)
            else:
                out.append(p)
        yield out
    finally:
        if tmp is not None:
            shutil.rmtree(tmp, ignore_errors=True)


def _add_input(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("-s", "--source", required=required, help="source file, or a TSV corpus when --target is omitted")
    p.add_argument("-t", "--target", help="target file (paired format)")
    p.add_argument("--format", choices=("paired", "tsv"), help="input format (inferred by default)")
    p.add_argument("--strict-utf8", action="store_true", help="fail on invalid UTF-8 instead of replacing it")


def _add_output(p: argparse.ArgumentParser, default: Optional[str] = STDIO) -> None:
    p.add_argument("-o", "--out-source", default=default, help="output source file, or TSV without --out-target")
    p.add_argument("--out-target", help="output target file (paired format)")


def _add_report(p: argparse.ArgumentParser) -> None:
    p.add_argument("--report", help="write the JSON report here ('-' for stdout)")
    p.add_argument("-q", "--quiet", action="store_true", help="no summary table on stderr")


def _reader(args, config: Optional[PipelineConfig] = None, origin=Origin.AUTHENTIC) -> ParallelReader:
    source, target, fmt = args.source, args.target, args.format
    errors = "strict" if args.strict_utf8 else "replace"
    if config is not None:
        if source is None:
            source = config.paths.source
            target = config.paths.target if target is None else target
            fmt = fmt or config.paths.format
        if not args.strict_utf8:
            errors = config.utf8_errors
    if source is None:
        raise ValidationError("--source", "no input corpus given (use --source or paths.source)")
    if source == STDIO and target == STDIO:
        raise ValidationError("--target", "only one input can be read from stdin")
    return read_parallel(source, target, fmt=fmt, errors=errors, origin=origin)


def _output_paths(args, config: Optional[PipelineConfig], stem: str):
    out_source, out_target = args.out_source, args.out_target
    if out_source is None:
        if config is None:
            out_source = STDIO
        else:
            config.paths.output_dir.mkdir(parents=True, exist_ok=True)
            out_source = config.paths.output_dir / f"{stem}.src"
            out_target = config.paths.output_dir / f"{stem}.tgt"
    if str(out_source) == STDIO and out_target is not None and str(out_target) == STDIO:
        raise ValidationError("--out-target", "only one output can go to stdout")
    return out_source, out_target


def _load(args) -> Optional[PipelineConfig]:
    path = getattr(args, "config", None)
    return load_config(path) if path else None


class _RejectWriter:
    """TSV log of dropped pairs: line, filter, reason, source, target."""

    def __init__(self, path: str):
        self.fh = sys.stdout if path == STDIO else open(path, "w", encoding="utf-8", newline="\n")

    def __call__(self, pair: SentencePair, verdict: FilterVerdict) -> None:
        src = pair.source.replace("\t", " ")
        tgt = pair.target.replace("\t", " ")
        self.fh.write(f"{pair.line_no}\t{verdict.filter_id}\t{verdict.reason}\t{src}\t{tgt}\n")

    def close(self) -> None:
        if self.fh is not sys.stdout:
            self.fh.close()


def _filtered(pairs, config: PipelineConfig, stats: CorpusStats, rejects=None, chain_ids=None, processes=None):
    chain = FilterChain(config.filter, chain_ids)
    processes = processes or config.filter_processes
    if processes > 1:
        return run_parallel(chain, pairs, processes, stats, rejects=rejects)
    return chain.run(pairs, stats, rejects)


def _deduplicated(pairs, key_mode: str, stats: CorpusStats) -> Iterator[SentencePair]:
    dedup = Deduplicator(key_mode)
    for pair in pairs:
        stats.input_count += 1
        if dedup.is_new(pair):
            stats.add_pair(pair)
            yield pair
        else:
            stats.duplicate_count += 1


def _finish_reader_stats(reader: ParallelReader, stats: CorpusStats) -> None:
    stats.invalid_utf8_lines = reader.invalid_utf8_lines


# ---------------------------------------------------------------------------
# Subcommands


def cmd_filter(args) -> int:
    config = _load(args) or PipelineConfig()
    chain_ids = args.chain.split(",") if args.chain else None
    reader = _reader(args, config if args.config else None)
    out_source, out_target = _output_paths(args, config if args.config else None, "filtered")
    stats = CorpusStats()
    rejects = _RejectWriter(args.rejects) if args.rejects else None
    t0 = time.perf_counter()
    try:
        write_corpus(_filtered(reader, config, stats, rejects, chain_ids, args.processes), out_source, out_target)
    finally:
        if rejects is not None:
            rejects.close()
    _finish_reader_stats(reader, stats)
    report = RunReport(config.snapshot() if args.config else None)
    report.add_stage("filter", stats, time.perf_counter() - t0)
    report.hash_files([reader.source_path, reader.target_path], [out_source, out_target])
    _emit_report(report, args.report, args.quiet)
    return 0


def cmd_dedup(args) -> int:
    config = _load(args)
    key_mode = args.key_mode or (config.dedup_key_mode if config else KEY_MODES[0])
    reader = _reader(args, config)
    out_source, out_target = _output_paths(args, config, "dedup")
    stats = CorpusStats()
    t0 = time.perf_counter()
    write_corpus(_deduplicated(reader, key_mode, stats), out_source, out_target)
    _finish_reader_stats(reader, stats)
    report = RunReport(config.snapshot() if config else None)
    report.add_stage("dedup", stats, time.perf_counter() - t0, key_mode=key_mode)
    report.hash_files([reader.source_path, reader.target_path], [out_source, out_target])
    _emit_report(report, args.report, args.quiet)
    return 0


def cmd_noise(args) -> int:
    config = _load(args)
    base = config.noise if config and config.noise else NoiseConfig(seed=config.seed if config else 0)
    overrides = {
        k: v
        for k, v in (
            ("k", args.k),
            ("p_mask", args.p_mask),
            ("p_drop", args.p_drop),
            ("mask_token", args.mask_token),
            ("seed", args.seed),
            ("order", tuple(args.order.split(",")) if args.order else None),
        )
        if v is not None
    }
    noise = replace(base, **overrides)
    errors = "strict" if args.strict_utf8 else "replace"
    counts = {"lines": 0, "empty": 0}

    def noised():
        for s in read_mono(args.input, errors=errors):
            counts["lines"] += 1
            if not s.text.split():
                counts["empty"] += 1
                yield ""
            else:
                yield noise_sentence(s.text, noise, s.line_no)

    write_mono(noised(), args.output)
    if counts["empty"]:
        logger.warning("%d empty lines passed through unchanged", counts["empty"])
    if not args.quiet:
        print(f"noised {counts['lines']:,} lines (k={noise.k}, p_mask={noise.p_mask}, p_drop={noise.p_drop}, seed={noise.seed})", file=sys.stderr)
    return 0


def cmd_tag(args) -> int:
    config = _load(args)
    spec = TagSpec(args.tag_token) if args.tag_token else (config.tag if config and config.tag else TagSpec())
    reader = _reader(args, None, origin=Origin.SYNTHETIC)
    stats = CorpusStats()

    def tagged():
        for pair in reader:
            stats.input_count += 1
            yield tag_synthetic(pair, spec)

    t0 = time.perf_counter()
    written = write_corpus(tagged(), args.out_source, args.out_target)
    stats.pair_count, stats.source_tokens, stats.target_tokens = written.pair_count, written.source_tokens, written.target_tokens
    _finish_reader_stats(reader, stats)
    report = RunReport()
    report.add_stage("tag", stats, time.perf_counter() - t0, tag_token=spec.tag_token)
    _emit_report(report, args.report, args.quiet)
    return 0


def cmd_mix(args) -> int:
    config = _load(args)
    base = config.mix if config else MixSpec()
    spec = MixSpec.parse_ratio(args.ratio, mode=base.mode, shuffle_seed=base.shuffle_seed) if args.ratio else base
    if args.mode:
        spec = replace(spec, mode=args.mode)
    if args.seed is not None:
        spec = replace(spec, shuffle_seed=args.seed)
    tag = None
    if args.tag:
        tag = config.tag if config and config.tag else TagSpec()
    if [args.authentic_source, args.authentic_target, args.synthetic_source, args.synthetic_target].count(STDIO) > 1:
        raise ValidationError("mix", "only one input can be read from stdin")
    t0 = time.perf_counter()
    with _seekable(args.authentic_source, args.authentic_target, args.synthetic_source, args.synthetic_target) as (
        a_src,
        a_tgt,
        s_src,
        s_tgt,
    ):
        with IndexedCorpus(a_src, a_tgt) as authentic, IndexedCorpus(s_src, s_tgt, origin=Origin.SYNTHETIC) as synthetic:
            counts = {"authentic": 0, "synthetic": 0}

            def counted(pairs):
                for p in pairs:
                    counts[p.origin.value] += 1
                    yield p

            stats = write_corpus(counted(mix_corpora(authentic, synthetic, spec, tag)), args.out_source, args.out_target)
            n_a, n_s = len(authentic), len(synthetic)
    report = RunReport()
    report.add_stage(
        "mix",
        stats,
        time.perf_counter() - t0,
        ratio=spec.ratio,
        mode=spec.mode,
        authentic_in=n_a,
        synthetic_in=n_s,
        composition=counts,
    )
    _emit_report(report, args.report, args.quiet)
    return 0


def run_pipeline(config: PipelineConfig, stages: Optional[Sequence[str]] = None) -> RunReport:
    """Run the configured stages in order.

    ``filter`` and ``dedup`` stream in one pass into ``output_dir/clean``;
    ``bt`` uses that corpus (or the configured input if neither ran) as
    authentic data; ``bleu`` scores the configured files.
    """
    stages = tuple(stages or config.stages)
    check_input_paths(config)
    report = RunReport(config.snapshot())
    out_dir = config.paths.output_dir
    authentic = (config.paths.source, config.paths.target)

    if "filter" in stages or "dedup" in stages:
        if config.paths.source is None:
            raise ValidationError("paths.source", "required for the filter and dedup stages")
        out_dir.mkdir(parents=True, exist_ok=True)
        reader = read_parallel(config.paths.source, config.paths.target, fmt=config.paths.format, errors=config.utf8_errors)
        pairs: Iterable[SentencePair] = reader
        fstats, dstats = CorpusStats(), CorpusStats()
        if "filter" in stages:
            pairs = _filtered(pairs, config, fstats)
        if "dedup" in stages:
            pairs = _deduplicated(pairs, config.dedup_key_mode, dstats)
        clean = (out_dir / "clean.src", out_dir / "clean.tgt")
        t0 = time.perf_counter()
        write_corpus(pairs, *clean)
        elapsed = time.perf_counter() - t0
        first = fstats if "filter" in stages else dstats
        first.invalid_utf8_lines = reader.invalid_utf8_lines
        # the stages share one streaming pass, so the time is reported once
        if "filter" in stages:
            report.add_stage("filter", fstats, elapsed)
        if "dedup" in stages:
            report.add_stage("dedup", dstats, 0.0 if "filter" in stages else elapsed, key_mode=config.dedup_key_mode)
        report.hash_files([config.paths.source, config.paths.target], clean)
        authentic = clean

    if "bt" in stages:
        if authentic[0] is None or authentic[1] is None:
            raise ValidationError("paths.target", "backtranslation needs a paired authentic corpus")
        bt_cfg = config.bt_config(Path(authentic[0]), Path(authentic[1]))
        t0 = time.perf_counter()
        result = run_loop(bt_cfg)
        elapsed = time.perf_counter() - t0
        iterations = []
        for rec in result.records:
            manifest = json.loads(rec.manifest.read_text(encoding="utf-8"))
            iterations.append(
                {
                    "direction": rec.direction,
                    "iteration": rec.iteration,
                    "generator_saw_bt": rec.generator_saw_bt,
                    "mixed": manifest["counts"],
                    "manifest": str(rec.manifest),
                }
            )
            report.hash_files([], rec.mixed)
        last = result.records[-1] if result.records else None
        stats = CorpusStats()
        if last is not None:
            counts = json.loads(last.manifest.read_text(encoding="utf-8"))["counts"]
            stats.input_count = stats.pair_count = counts["mixed"]
        report.add_stage("bt", stats, elapsed, iterations=iterations)

    if "bleu" in stages:
        b = config.bleu
        if b.hypotheses is None or b.references is None:
            raise ValidationError("bleu.hypotheses", "bleu stage needs hypotheses and references")
        t0 = time.perf_counter()
        score = _score_files(b.hypotheses, b.references)
        stats = CorpusStats(pair_count=len(_read_lines(b.references)), input_count=len(_read_lines(b.references)))
        record = _bleu_record(score, b.lang)
        report.add_stage("bleu", stats, time.perf_counter() - t0, bleu=record)
    return report


def cmd_bt_run(args) -> int:
    config = load_config(args.config)
    stages = args.stages.split(",") if args.stages else None
    if stages:
        from .config import STAGES

        for s in stages:
            if s not in STAGES:
                raise ValidationError("--stages", f"unknown stage {s!r}")
    report = run_pipeline(config, stages)
    report_path = args.report or str(config.paths.output_dir / "report.json")
    config.paths.output_dir.mkdir(parents=True, exist_ok=True)
    _emit_report(report, report_path, args.quiet)
    for st in report.stages:
        if st["stage"] == "bt" and not args.quiet:
            for it in st["iterations"]:
                print(
                    f"bt {it['direction']} iter {it['iteration']}: {it['mixed']['mixed']:,} pairs "
                    f"({it['mixed']['mixed_synthetic']:,} synthetic), generator_saw_bt={it['generator_saw_bt']}",
                    file=sys.stderr,
                )
        if st["stage"] == "bleu" and not args.quiet:
            print(st["bleu"]["formatted"], file=sys.stderr)
    return 0


def _read_lines(path) -> List[str]:
    return [s.text for s in read_mono(path)]


def _score_files(hyp, ref):
    return bleu(_read_lines(hyp), _read_lines(ref))


def _bleu_record(score, lang: Optional[str]) -> dict:
    sig = signature(lang)
    record = score.to_dict()
    record["signature"] = f"BLEU+{sig}"
    record["formatted"] = score.format(sig)
    return record


def cmd_bleu(args) -> int:
    if args.hyp == STDIO and args.ref == STDIO:
        raise ValidationError("--ref", "only one input can be read from stdin")
    score = _score_files(args.hyp, args.ref)
    if args.human:
        print(score.format(signature(args.lang)))
    else:
        print(json.dumps(_bleu_record(score, args.lang), sort_keys=True, ensure_ascii=False))
    return 0


def cmd_stats(args) -> int:
    reader = _reader(args)
    stats = CorpusStats()
    t0 = time.perf_counter()
    for pair in reader:
        stats.input_count += 1
        stats.add_pair(pair)
    _finish_reader_stats(reader, stats)
    report = RunReport()
    report.add_stage("stats", stats, time.perf_counter() - t0)
    report.hash_files([reader.source_path, reader.target_path], [])
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False))
    if not args.quiet:
        print(report.table(), file=sys.stderr)
    return 0


def cmd_validate_config(args) -> int:
    config = load_config(args.config_file)
    if args.dump:
        print(json.dumps(config.snapshot(), indent=2, sort_keys=True, ensure_ascii=False))
    else:
        print(f"{args.config_file}: ok")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bitextkit", description="Bitext filtering and backtranslation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("filter", help="run the heuristic filter chain")
    p.add_argument("--config", help="pipeline config (TOML)")
    _add_input(p, required=False)
    _add_output(p, default=None)
    p.add_argument("--chain", help=f"comma-separated filter ids (known: {','.join(FILTER_IDS)})")
    p.add_argument("--rejects", help="write dropped pairs with their reasons as TSV")
    p.add_argument("--processes", type=int, help="worker processes (default 1)")
    _add_report(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("dedup", help="drop duplicate pairs, keeping first occurrences")
    p.add_argument("--config", help="pipeline config (TOML)")
    _add_input(p, required=False)
    _add_output(p, default=None)
    p.add_argument("--key-mode", choices=KEY_MODES)
    _add_report(p)
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("noise", help="noise sentences (dropout, masking, local permutation)")
    p.add_argument("--config", help="pipeline config (TOML)")
    p.add_argument("-i", "--input", default=STDIO)
    p.add_argument("-o", "--output", default=STDIO)
    p.add_argument("--k", type=int)
    p.add_argument("--p-mask", type=float)
    p.add_argument("--p-drop", type=float)
    p.add_argument("--mask-token")
    p.add_argument("--order", help="comma-separated order of drop,mask,permute")
    p.add_argument("--seed", type=int)
    p.add_argument("--strict-utf8", action="store_true")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("tag", help="prefix synthetic source sentences with a tag token")
    p.add_argument("--config", help="pipeline config (TOML)")
    _add_input(p)
    _add_output(p)
    p.add_argument("--tag-token")
    _add_report(p)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("mix", help="mix authentic and synthetic corpora at a ratio")
    p.add_argument("--config", help="pipeline config (TOML)")
    p.add_argument("--authentic-source", required=True)
    p.add_argument("--authentic-target")
    p.add_argument("--synthetic-source", required=True)
    p.add_argument("--synthetic-target")
    p.add_argument("--ratio", help="authentic:synthetic, e.g. 1:2")
    p.add_argument("--mode", choices=MIX_MODES)
    p.add_argument("--seed", type=int, help="shuffle seed")
    p.add_argument("--tag", action="store_true", help="tag synthetic pairs on the way out")
    _add_output(p)
    _add_report(p)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("bt-run", help="run the configured pipeline, including iterative backtranslation")
    p.add_argument("--config", required=True, help="pipeline config (TOML)")
    p.add_argument("--stages", help="comma-separated subset of filter,dedup,bt,bleu")
    _add_report(p)
    p.set_defaults(func=cmd_bt_run)

    p = sub.add_parser("bleu", help="corpus BLEU (13a tokenization, exponential smoothing)")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--lang", help="language pair for the signature, e.g. en-is")
    p.add_argument("--human", action="store_true", help="one-line summary instead of JSON")
    p.set_defaults(func=cmd_bleu)

    p = sub.add_parser("stats", help="count pairs and tokens")
    _add_input(p)
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate-config", help="check a config file")
    p.add_argument("config_file")
    p.add_argument("--dump", action="store_true", help="print the effective config as JSON")
    p.set_defaults(func=cmd_validate_config)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"bitextkit: config error: {exc}", file=sys.stderr)
        return 2
    except BitextError as exc:
        print(f"bitextkit: error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # downstream closed early (e.g. `| head`); not worth a traceback
        with contextlib.suppress(Exception):
            sys.stdout = open(os.devnull, "w")
        return 1
    except OSError as exc:
        print(f"bitextkit: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
