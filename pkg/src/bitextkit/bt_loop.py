"""Iterative backtranslation driven by external translator and trainer commands.

An iteration for training direction ``src-tgt``:

1. translate the ``tgt`` monolingual corpus with the ``tgt-src`` translator;
2. pair each translation (source side) with its original sentence (target side);
3. noise (beam decoding only, if enabled) and tag the synthetic sources;
4. mix with the authentic corpus at the configured ratio;
5. write corpora and a report;
6. run the trainer hook on the mixed corpus;
7. record lineage and write the manifest.

Translator protocol: N UTF-8 lines on stdin, exactly N lines on stdout.
Placeholders ``{direction} {strategy} {beam_width} {temperature}`` (and
optionally ``{iteration}``) are substituted into the command. The trainer
command receives ``{corpus_source} {corpus_target} {iteration}`` (and
optionally ``{direction}``).

On-disk layout, per direction::

    work_dir/en-is/iter_00/{synthetic,mixed}.{src,tgt}, report.json, manifest.json

Corpora are built in ``iter_NN.tmp`` and renamed into place only when
complete, so a partial corpus is never visible under the final name. The
manifest is written last and marks the iteration as done; a directory
without one is rebuilt on the next run.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import logging
import os
import shlex
import shutil
import string
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .augment import MixSpec, TagSpec, mix_corpora, tag_synthetic
from .corpus_io import (
    IndexedCorpus,
    MonoSentence,
    Origin,
    SentencePair,
    file_sha256,
    read_mono,
    write_corpus,
)
from .errors import (
    BitextError,
    NonZeroExit,
    Timeout,
    TranslatorError,
    TranslatorLineCountMismatch,
    ValidationError,
)
from .noising import NoiseConfig, noise_sentence

logger = logging.getLogger(__name__)

BEAM = "beam"
SAMPLING = "sampling"
SIMULTANEOUS = "simultaneous"
PING_PONG = "ping-pong"
STOP_RULE = "rule"
STOP_FORCE = "force"

TRANSLATOR_PLACEHOLDERS = {"direction", "strategy", "beam_width", "temperature", "iteration"}
TRAINER_PLACEHOLDERS = {"corpus_source", "corpus_target", "iteration", "direction"}

MANIFEST = "manifest.json"
REPORT = "report.json"


def _placeholders(template: str) -> set:
    names = set()
    for _, name, _, _ in string.Formatter().parse(template):
        if name is not None:
            names.add(name)
    return names


def _expand(template: str, values: Mapping[str, object]) -> List[str]:
    return [token.format_map(values) for token in shlex.split(template)]


def _check_template(field_name: str, template: str, allowed: set, required: set) -> None:
    try:
        names = _placeholders(template)
        shlex.split(template)
    except ValueError as exc:
        raise ValidationError(field_name, f"cannot parse command template: {exc}") from None
    if not template.strip():
        raise ValidationError(field_name, "empty command")
    unknown = names - allowed
    if unknown:
        raise ValidationError(field_name, f"unknown placeholders {sorted(unknown)}")
    missing = required - names
    if missing:
        raise ValidationError(field_name, f"missing placeholders {sorted(missing)}")


def check_direction(direction: str) -> Tuple[str, str]:
    parts = direction.split("-")
    if len(parts) != 2 or not all(parts) or parts[0] == parts[1]:
        raise ValidationError("direction", f"expected 'xx-yy', got {direction!r}")
    return parts[0], parts[1]


def reverse(direction: str) -> str:
    src, tgt = check_direction(direction)
    return f"{tgt}-{src}"


@dataclass(frozen=True)
class DecodeParams:
    strategy: str = BEAM
    beam_width: int = 4
    sampling_temperature: float = 1.0

    def __post_init__(self):
        if self.strategy not in (BEAM, SAMPLING):
            raise ValidationError("decode.strategy", "must be 'beam' or 'sampling'")
        if not isinstance(self.beam_width, int) or self.beam_width < 1:
            raise ValidationError("decode.beam_width", "must be an integer >= 1")
        if not self.sampling_temperature > 0:
            raise ValidationError("decode.sampling_temperature", "must be > 0")


@dataclass(frozen=True)
class TranslatorSpec:
    command: str
    batch_size: int = 256
    timeout: float = 3600.0
    workers: int = 1
    retries: int = 2

    def __post_init__(self):
        _check_template("translator.command", self.command, TRANSLATOR_PLACEHOLDERS, {"direction", "strategy"})
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ValidationError("translator.batch_size", "must be an integer >= 1")
        if not self.timeout > 0:
            raise ValidationError("translator.timeout", "must be > 0")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ValidationError("translator.workers", "must be an integer >= 1")
        if not isinstance(self.retries, int) or self.retries < 0:
            raise ValidationError("translator.retries", "must be an integer >= 0")

    def argv(self, direction: str, params: DecodeParams, iteration: int = 0) -> List[str]:
        return _expand(
            self.command,
            {
                "direction": direction,
                "strategy": params.strategy,
                "beam_width": params.beam_width,
                "temperature": params.sampling_temperature,
                "iteration": iteration,
            },
        )


@dataclass(frozen=True)
class TrainerSpec:
    command: str
    timeout: Optional[float] = None

    def __post_init__(self):
        _check_template("trainer.command", self.command, TRAINER_PLACEHOLDERS, {"corpus_source", "corpus_target"})

    def argv(self, corpus_source, corpus_target, iteration: int, direction: str) -> List[str]:
        return _expand(
            self.command,
            {
                "corpus_source": corpus_source,
                "corpus_target": corpus_target,
                "iteration": iteration,
                "direction": direction,
            },
        )


@dataclass(frozen=True)
class BTConfig:
    work_dir: Path
    authentic_source: Path
    authentic_target: Path
    mono: Mapping[str, Path]
    translator: TranslatorSpec
    trainer: Optional[TrainerSpec] = None
    corpus_direction: str = "en-is"
    directions: Tuple[str, ...] = ("en-is", "is-en")
    decode: DecodeParams = DecodeParams()
    noise: Optional[NoiseConfig] = NoiseConfig()
    tag: Optional[TagSpec] = TagSpec()
    mix: MixSpec = MixSpec()
    schedule: str = SIMULTANEOUS
    max_iterations: int = 10
    stop_mode: str = STOP_RULE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "work_dir", Path(self.work_dir))
        object.__setattr__(self, "authentic_source", Path(self.authentic_source))
        object.__setattr__(self, "authentic_target", Path(self.authentic_target))
        object.__setattr__(self, "mono", {k: Path(v) for k, v in dict(self.mono).items()})
        object.__setattr__(self, "directions", tuple(self.directions))
        corpus_langs = set(check_direction(self.corpus_direction))
        if not self.directions:
            raise ValidationError("bt.directions", "must name at least one direction")
        if len(set(self.directions)) != len(self.directions):
            raise ValidationError("bt.directions", "duplicate direction")
        for d in self.directions:
            src, tgt = check_direction(d)
            if {src, tgt} != corpus_langs:
                raise ValidationError("bt.directions", f"{d} does not match the authentic corpus languages")
            if tgt not in self.mono:
                raise ValidationError("paths.mono", f"no monolingual corpus for {tgt!r} (needed by {d})")
        if self.schedule not in (SIMULTANEOUS, PING_PONG):
            raise ValidationError("bt.schedule", "must be 'simultaneous' or 'ping-pong'")
        if self.stop_mode not in (STOP_RULE, STOP_FORCE):
            raise ValidationError("bt.stop_mode", "must be 'rule' or 'force'")
        if not isinstance(self.max_iterations, int) or self.max_iterations < 1:
            raise ValidationError("bt.max_iterations", "must be an integer >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed", "must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class IterationRecord:
    direction: str
    iteration: int
    generator_saw_bt: bool
    directory: Path

    @property
    def synthetic(self) -> Tuple[Path, Path]:
        return self.directory / "synthetic.src", self.directory / "synthetic.tgt"

    @property
    def mixed(self) -> Tuple[Path, Path]:
        return self.directory / "mixed.src", self.directory / "mixed.tgt"

    @property
    def report(self) -> Path:
        return self.directory / REPORT

    @property
    def manifest(self) -> Path:
        return self.directory / MANIFEST


@dataclass(frozen=True)
class IterationState:
    """Progress of one direction.

    ``iteration`` is the next iteration to run (equal to the number
    completed); ``generator_saw_bt`` describes the model that produced the
    synthetic data of the most recently completed iteration.
    """

    direction: str
    iteration: int = 0
    generator_saw_bt: bool = False
    history: Tuple[IterationRecord, ...] = ()

    @property
    def last(self) -> Optional[IterationRecord]:
        return self.history[-1] if self.history else None

    def advanced(self, record: IterationRecord) -> "IterationState":
        return IterationState(self.direction, record.iteration + 1, record.generator_saw_bt, self.history + (record,))


def should_stop(state: IterationState, max_iterations: Optional[int] = None, stop_mode: str = STOP_RULE) -> bool:
    """Stop once the model just trained learned from data whose generator had itself seen synthetic data.

    ``stop_mode="force"`` ignores that rule and runs exactly
    ``max_iterations``; otherwise ``max_iterations`` is only a cap.
    """
    if stop_mode == STOP_FORCE:
        if max_iterations is None:
            raise ValueError("force mode needs max_iterations")
        return state.iteration >= max_iterations
    if max_iterations is not None and state.iteration >= max_iterations:
        return True
    return state.last is not None and state.last.generator_saw_bt


# ---------------------------------------------------------------------------
# Translator protocol


def translate_batch(
    spec: TranslatorSpec,
    sentences: Sequence[MonoSentence],
    params: DecodeParams,
    *,
    direction: str,
    iteration: int = 0,
) -> List[str]:
    """Run the translator once over ``sentences``; returns one line per input."""
    if not sentences:
        raise ValueError("empty batch")
    lines = []
    for s in sentences:
        text = s.text if isinstance(s, MonoSentence) else s
        if not text or not text.strip():
            raise ValueError("translator input lines must be non-empty")
        if "\n" in text or "\r" in text:
            raise ValueError("translator input lines must not contain line breaks")
        lines.append(text)
    argv = spec.argv(direction, params, iteration)
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    try:
        proc = subprocess.run(argv, input=payload, capture_output=True, timeout=spec.timeout)
    except subprocess.TimeoutExpired:
        raise Timeout(argv, spec.timeout) from None
    except OSError as exc:
        raise TranslatorError(f"cannot start translator {argv[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        raise NonZeroExit(argv, proc.returncode, proc.stderr.decode("utf-8", "replace"))
    out = proc.stdout.decode("utf-8", "replace")
    if out.endswith("\n"):
        out = out[:-1]
    result = out.split("\n") if (out or len(lines) == 1 and proc.stdout) else []
    if len(result) != len(lines):
        raise TranslatorLineCountMismatch(len(lines), len(result))
    return [line[:-1] if line.endswith("\r") else line for line in result]


def _translate_with_retries(spec, batch, params, direction, iteration) -> List[str]:
    for attempt in itertools.count():
        try:
            return translate_batch(spec, batch, params, direction=direction, iteration=iteration)
        except TranslatorError as exc:
            if not exc.retriable or attempt >= spec.retries:
                raise
            logger.warning("translator batch failed (%s); retry %d/%d", exc, attempt + 1, spec.retries)


def translate_stream(
    spec: TranslatorSpec,
    sentences: Iterable[MonoSentence],
    params: DecodeParams,
    *,
    direction: str,
    iteration: int = 0,
) -> Iterator[Tuple[MonoSentence, str]]:
    """Translate a stream in batches, possibly with concurrent translator processes.

    Yields ``(input, translation)`` in input order whatever the batch
    completion order.
    """
    it = iter(sentences)
    window = spec.batch_size * spec.workers
    pool = ThreadPoolExecutor(spec.workers) if spec.workers > 1 else None
    try:
        while True:
            chunk = list(itertools.islice(it, window))
            if not chunk:
                return
            batches = [chunk[i : i + spec.batch_size] for i in range(0, len(chunk), spec.batch_size)]
            if pool is None:
                results = [_translate_with_retries(spec, b, params, direction, iteration) for b in batches]
            else:
                results = list(
                    pool.map(lambda b: _translate_with_retries(spec, b, params, direction, iteration), batches)
                )
            for batch, translations in zip(batches, results):
                yield from zip(batch, translations)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)


# ---------------------------------------------------------------------------
# Iterations


class _SwappedView(Sequence):
    """Read-only view of a corpus with source and target exchanged."""

    def __init__(self, inner: Sequence[SentencePair]):
        self.inner = inner

    def __len__(self):
        return len(self.inner)

    def __getitem__(self, i):
        p = self.inner[i]
        return SentencePair(p.target, p.source, p.origin, p.tags, p.line_no)


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit child seed for ``keys`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def _direction_key(direction: str) -> int:
    return int.from_bytes(direction.encode("ascii"), "little")


def _iteration_dir(config: BTConfig, direction: str, iteration: int) -> Path:
    return config.work_dir / direction / f"iter_{iteration:02d}"


def _write_json_atomic(path: Path, payload: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _config_snapshot(config: BTConfig) -> dict:
    return {
        "decode": dataclasses.asdict(config.decode),
        "noise": dataclasses.asdict(config.noise) if config.noise else None,
        "tag": dataclasses.asdict(config.tag) if config.tag else None,
        "mix": dataclasses.asdict(config.mix),
        "translator_command": config.translator.command,
        "trainer_command": config.trainer.command if config.trainer else None,
        "schedule": config.schedule,
        "seed": config.seed,
    }


@dataclass
class _Built:
    record: IterationRecord
    report: dict
    seeds: dict


def build_iteration(state: IterationState, config: BTConfig, generator_saw_bt: Optional[bool] = None) -> _Built:
    """Steps 1-5: synthesize, mix and write corpora for ``state.iteration``."""
    direction, i = state.direction, state.iteration
    if generator_saw_bt is None:
        generator_saw_bt = i >= 1
    src_lang, tgt_lang = check_direction(direction)
    final_dir = _iteration_dir(config, direction, i)
    staging = final_dir.with_name(final_dir.name + ".tmp")
    if (final_dir / MANIFEST).exists():
        raise BitextError(f"{final_dir} is already complete")
    for stale in (staging, final_dir):
        if stale.exists():
            logger.warning("removing incomplete iteration directory %s", stale)
            shutil.rmtree(stale)
    staging.mkdir(parents=True)

    dkey = _direction_key(direction)
    seeds = {
        "noise": derive_seed(config.seed, dkey, i, 1),
        "mix": derive_seed(config.seed, dkey, i, 2),
    }
    timings = {}
    report = {"direction": direction, "iteration": i, "generator_saw_bt": generator_saw_bt}

    try:
        # 1-3: translate, pair, noise, tag
        t0 = time.perf_counter()
        mono_path = config.mono[tgt_lang]
        skipped = 0

        def non_empty(stream: Iterable[MonoSentence]) -> Iterator[MonoSentence]:
            nonlocal skipped
            for s in stream:
                if s.text.strip():
                    yield s
                else:
                    skipped += 1

        noise = None
        if config.noise is not None and config.decode.strategy == BEAM:
            noise = dataclasses.replace(config.noise, seed=seeds["noise"])
        empty_translations = 0

        def synthetic_pairs() -> Iterator[SentencePair]:
            nonlocal empty_translations
            translated = translate_stream(
                config.translator,
                non_empty(read_mono(mono_path)),
                config.decode,
                direction=reverse(direction),
                iteration=i,
            )
            for mono, hyp in translated:
                hyp = " ".join(hyp.split())
                if not hyp:
                    empty_translations += 1
                elif noise is not None:
                    hyp = noise_sentence(hyp, noise, mono.line_no)
                pair = SentencePair(hyp, mono.text, Origin.SYNTHETIC, (), mono.line_no)
                if config.tag is not None:
                    pair = tag_synthetic(pair, config.tag)
                yield pair

        syn_src, syn_tgt = staging / "synthetic.src", staging / "synthetic.tgt"
        syn_stats = write_corpus(synthetic_pairs(), syn_src, syn_tgt)
        if skipped:
            logger.info("%s: skipped %d empty monolingual lines", mono_path, skipped)
        timings["synthesize"] = time.perf_counter() - t0

        # 4-5: mix and write
        t0 = time.perf_counter()
        authentic = IndexedCorpus(config.authentic_source, config.authentic_target)
        synthetic = IndexedCorpus(syn_src, syn_tgt, origin=Origin.SYNTHETIC)
        try:
            view = authentic if direction == config.corpus_direction else _SwappedView(authentic)
            mix_spec = dataclasses.replace(config.mix, shuffle_seed=seeds["mix"])
            counts = {"authentic": 0, "synthetic": 0}

            def counted(pairs):
                for p in pairs:
                    counts[p.origin.value] += 1
                    yield p

            mixed_stats = write_corpus(
                counted(mix_corpora(view, synthetic, mix_spec)),
                staging / "mixed.src",
                staging / "mixed.tgt",
            )
            n_authentic = len(authentic)
        finally:
            authentic.close()
            synthetic.close()
        timings["mix"] = time.perf_counter() - t0

        report.update(
            {
                "monolingual_skipped_empty": skipped,
                "empty_translations": empty_translations,
                "authentic_pairs": n_authentic,
                "synthetic": syn_stats.to_dict(),
                "mixed": mixed_stats.to_dict(),
                "mixed_composition": counts,
            }
        )
        # timings stay out of the report so that reruns are byte-identical
        logger.info("%s iteration %d: %s", direction, i, ", ".join(f"{k} {v:.2f}s" for k, v in timings.items()))
        _write_json_atomic(staging / REPORT, report)
        os.replace(staging, final_dir)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise

    record = IterationRecord(direction, i, generator_saw_bt, final_dir)
    return _Built(record, report, seeds)


def finish_iteration(built: _Built, config: BTConfig) -> IterationRecord:
    """Steps 6-7: trainer hook, then the manifest that marks completion."""
    record = built.record
    src, tgt = record.mixed
    if config.trainer is not None:
        argv = config.trainer.argv(src, tgt, record.iteration, record.direction)
        t0 = time.perf_counter()
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=config.trainer.timeout)
        except subprocess.TimeoutExpired:
            raise Timeout(argv, config.trainer.timeout) from None
        except OSError as exc:
            raise BitextError(f"cannot start trainer {argv[0]!r}: {exc}") from exc
        if proc.returncode != 0:
            raise NonZeroExit(argv, proc.returncode, proc.stderr.decode("utf-8", "replace"))
        logger.info("%s iteration %d: train %.2fs", record.direction, record.iteration, time.perf_counter() - t0)

    def rel(p: Path) -> str:
        return p.relative_to(config.work_dir).as_posix()

    outputs = [*record.synthetic, *record.mixed]
    manifest = {
        "direction": record.direction,
        "iteration": record.iteration,
        "generator_saw_bt": record.generator_saw_bt,
        "inputs": {
            str(p): file_sha256(p)
            for p in (
                config.authentic_source,
                config.authentic_target,
                config.mono[check_direction(record.direction)[1]],
            )
        },
        "outputs": {rel(p): file_sha256(p) for p in outputs},
        "seeds": built.seeds,
        "config": _config_snapshot(config),
        "counts": {
            "synthetic": built.report["synthetic"]["pair_count"],
            "mixed": built.report["mixed"]["pair_count"],
            "mixed_authentic": built.report["mixed_composition"]["authentic"],
            "mixed_synthetic": built.report["mixed_composition"]["synthetic"],
        },
    }
    _write_json_atomic(record.manifest, manifest)
    return record


def run_iteration(state: IterationState, config: BTConfig, generator_saw_bt: Optional[bool] = None) -> IterationState:
    """Run one full iteration and return the advanced state."""
    record = finish_iteration(build_iteration(state, config, generator_saw_bt), config)
    return state.advanced(record)


def load_record(manifest_path: Path, config: Optional[BTConfig] = None) -> IterationRecord:
    """Read a completed iteration back; with ``config``, refuse stale work."""
    with open(manifest_path, encoding="utf-8") as fh:
        data = json.load(fh)
    record = IterationRecord(data["direction"], data["iteration"], data["generator_saw_bt"], Path(manifest_path).parent)
    if config is not None:
        if data.get("config") != json.loads(json.dumps(_config_snapshot(config))):
            raise BitextError(f"{manifest_path}: written with a different configuration; use a fresh work_dir")
        for path, digest in data.get("inputs", {}).items():
            if not Path(path).is_file() or file_sha256(path) != digest:
                raise BitextError(f"{manifest_path}: input {path} changed since this iteration was built")
        for rel, digest in data.get("outputs", {}).items():
            p = config.work_dir / rel
            if not p.is_file() or file_sha256(p) != digest:
                raise BitextError(f"{manifest_path}: output {rel} is missing or modified")
    return record


# ---------------------------------------------------------------------------
# The loop


@dataclass
class LoopResult:
    states: Dict[str, IterationState]
    model_saw_bt: Dict[str, bool] = field(default_factory=dict)

    @property
    def records(self) -> List[IterationRecord]:
        return sorted(
            (r for s in self.states.values() for r in s.history),
            key=lambda r: (r.iteration, r.direction),
        )


def run_loop(config: BTConfig) -> LoopResult:
    """Iterate every configured direction until each one should stop.

    Lineage is tracked per model: a direction's model has "seen
    backtranslations" once it has been trained on a synthetic corpus, and the
    synthetic data for direction ``d`` comes from the model for ``reverse(d)``.

    ``simultaneous``: in round ``i`` all directions translate with the models
    from round ``i - 1`` and then train. ``ping-pong``: directions run one
    after another and each uses the other's latest model. Completed
    iterations (those with a manifest) are loaded, not recomputed.
    """
    states = {d: IterationState(d) for d in config.directions}
    # Models are parallel-only until trained on synthetic data.
    saw_bt = {d: False for d in set(config.directions) | {reverse(d) for d in config.directions}}
    if len(config.directions) == 1:
        logger.warning(
            "only %s is trained; its generator never sees synthetic data, so max_iterations (%d) decides when to stop",
            config.directions[0],
            config.max_iterations,
        )

    def active() -> List[str]:
        return [d for d in config.directions if not should_stop(states[d], config.max_iterations, config.stop_mode)]

    def resume(direction: str) -> Optional[IterationRecord]:
        manifest = _iteration_dir(config, direction, states[direction].iteration) / MANIFEST
        return load_record(manifest, config) if manifest.exists() else None

    while True:
        directions = active()
        if not directions:
            break
        if config.schedule == SIMULTANEOUS:
            snapshot = dict(saw_bt)
            built = {}
            for d in directions:
                done = resume(d)
                if done is not None:
                    states[d] = states[d].advanced(done)
                    continue
                built[d] = build_iteration(states[d], config, snapshot[reverse(d)])
            for d, b in built.items():
                states[d] = states[d].advanced(finish_iteration(b, config))
            for d in directions:
                saw_bt[d] = True
        else:
            for d in directions:
                done = resume(d)
                if done is None:
                    done = finish_iteration(build_iteration(states[d], config, saw_bt[reverse(d)]), config)
                states[d] = states[d].advanced(done)
                saw_bt[d] = True
                if not active():
                    break
    return LoopResult(states, saw_bt)
