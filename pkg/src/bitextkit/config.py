"""Pipeline configuration: one TOML file with a section per stage.

Every key is optional and has a documented default; unknown keys and
sections are rejected so that a mistyped threshold name cannot silently fall
back to its default. Relative paths are resolved against the directory of
the config file. ``BITEXTKIT_SEED`` overrides ``seed``.

Example::

    seed = 1234
    direction = "en-is"
    stages = ["filter", "dedup", "bt"]

    [paths]
    source = "data/train.en"
    target = "data/train.is"
    output_dir = "out"
    mono = { en = "data/mono.en", is = "data/mono.is" }

    [filter]
    length_ratio_max = 9.0
    chain = ["fix_encoding", "normalize_punctuation", "empty", "length"]

    [mix]
    ratio = "1:2"

    [translator]
    command = "my-translate --dir {direction} --mode {strategy} --beam {beam_width}"
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import bt_loop
from .augment import MIX_MODES, MixSpec, TagSpec
from .bt_loop import BTConfig, DecodeParams, TrainerSpec, TranslatorSpec
from .corpus_io import EXACT_PAIR, KEY_MODES, PAIRED, TSV
from .errors import ParseError, ValidationError
from .filters import FilterConfig, MojibakeTable, RegexFixes, charset_from_preset
from .noising import NoiseConfig

SEED_ENV = "BITEXTKIT_SEED"
TMPDIR_ENV = "BITEXTKIT_TMPDIR"

STAGES = ("filter", "dedup", "bt", "bleu")
DEFAULT_STAGES = ("filter", "dedup", "bt")

_INT = (int,)
_NUM = (int, float)
_STR = (str,)
_BOOL = (bool,)
_LIST = (list,)
_TABLE = (dict,)

# section -> key -> accepted types
_SCHEMA: Dict[str, Dict[str, tuple]] = {
    "": {"seed": _INT, "direction": _STR, "stages": _LIST},
    "paths": {
        "source": _STR,
        "target": _STR,
        "format": _STR,
        "output_dir": _STR,
        "work_dir": _STR,
        "mono": _TABLE,
    },
    "filter": {
        "min_chars": _INT,
        "max_chars": _INT,
        "max_tokens": _INT,
        "length_ratio_max": _NUM,
        "charset_source": _STR,
        "charset_source_extra": _STR,
        "charset_target": _STR,
        "charset_target_extra": _STR,
        "charset_tolerance": _NUM,
        "edit_distance_min_normalized": _NUM,
        "symbol_slack": _INT,
        "normalize_dashes": _BOOL,
        "mojibake_table": _STR,
        "regex_fixes": _STR,
        "chain": _LIST,
        "processes": _INT,
        "utf8_errors": _STR,
    },
    "dedup": {"key_mode": _STR},
    "noise": {
        "enabled": _BOOL,
        "k": _INT,
        "p_mask": _NUM,
        "p_drop": _NUM,
        "mask_token": _STR,
        "order": _LIST,
    },
    "tag": {"enabled": _BOOL, "tag_token": _STR},
    "mix": {"ratio": _STR, "mode": _STR},
    "translator": {"command": _STR, "batch_size": _INT, "timeout": _NUM, "workers": _INT, "retries": _INT},
    "decode": {"strategy": _STR, "beam_width": _INT, "sampling_temperature": _NUM},
    "trainer": {"command": _STR, "timeout": _NUM},
    "bt": {"directions": _LIST, "schedule": _STR, "max_iterations": _INT, "stop_mode": _STR},
    "bleu": {"hypotheses": _STR, "references": _STR, "lang": _STR},
}


@dataclass(frozen=True)
class PathsConfig:
    source: Optional[Path] = None
    target: Optional[Path] = None
    format: Optional[str] = None
    output_dir: Path = Path("out")
    work_dir: Optional[Path] = None
    mono: Mapping[str, Path] = field(default_factory=dict)

    @property
    def bt_work_dir(self) -> Path:
        return self.work_dir if self.work_dir is not None else self.output_dir / "bt"


@dataclass(frozen=True)
class BtOptions:
    directions: Tuple[str, ...] = ("en-is", "is-en")
    schedule: str = bt_loop.SIMULTANEOUS
    max_iterations: int = 10
    stop_mode: str = bt_loop.STOP_RULE


@dataclass(frozen=True)
class BleuInputs:
    hypotheses: Optional[Path] = None
    references: Optional[Path] = None
    lang: Optional[str] = None


@dataclass(frozen=True)
class PipelineConfig:
    source_file: Optional[Path] = None
    seed: int = 0
    direction: str = "en-is"
    stages: Tuple[str, ...] = DEFAULT_STAGES
    paths: PathsConfig = PathsConfig()
    filter: FilterConfig = field(default_factory=FilterConfig)
    filter_processes: int = 1
    utf8_errors: str = "replace"
    dedup_key_mode: str = EXACT_PAIR
    noise: Optional[NoiseConfig] = NoiseConfig()
    tag: Optional[TagSpec] = TagSpec()
    mix: MixSpec = MixSpec()
    translator: Optional[TranslatorSpec] = None
    decode: DecodeParams = DecodeParams()
    trainer: Optional[TrainerSpec] = None
    bt: BtOptions = BtOptions()
    bleu: BleuInputs = BleuInputs()

    def bt_config(self, authentic_source: Path, authentic_target: Path) -> BTConfig:
        if self.translator is None:
            raise ValidationError("translator.command", "required for backtranslation")
        return BTConfig(
            work_dir=self.paths.bt_work_dir,
            authentic_source=authentic_source,
            authentic_target=authentic_target,
            mono=self.paths.mono,
            translator=self.translator,
            trainer=self.trainer,
            corpus_direction=self.direction,
            directions=self.bt.directions,
            decode=self.decode,
            noise=self.noise,
            tag=self.tag,
            mix=self.mix,
            schedule=self.bt.schedule,
            max_iterations=self.bt.max_iterations,
            stop_mode=self.bt.stop_mode,
            seed=self.seed,
        )

    def snapshot(self) -> dict:
        """JSON-friendly view for reports."""

        def conv(v):
            if isinstance(v, Path):
                return str(v)
            if isinstance(v, (frozenset, set)):
                return "".join(sorted(v))
            if isinstance(v, (MojibakeTable, RegexFixes)):
                return f"{len(v)} entries"
            if dataclasses.is_dataclass(v):
                return {f.name: conv(getattr(v, f.name)) for f in dataclasses.fields(v)}
            if isinstance(v, Mapping):
                return {str(k): conv(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            return v

        return conv(self)


def _check_keys(data: dict) -> None:
    for key, value in data.items():
        if key in _SCHEMA and key:
            if not isinstance(value, dict):
                raise ValidationError(key, "must be a table")
            for sub, subval in value.items():
                if sub not in _SCHEMA[key]:
                    raise ValidationError(f"{key}.{sub}", "unknown key")
                _check_type(f"{key}.{sub}", subval, _SCHEMA[key][sub])
        elif key in _SCHEMA[""]:
            _check_type(key, value, _SCHEMA[""][key])
        else:
            raise ValidationError(key, "unknown key or section")


def _check_type(name: str, value: Any, types: tuple) -> None:
    # bool is an int subclass; never accept it for numeric fields
    if isinstance(value, bool) and bool not in types:
        raise ValidationError(name, f"expected {_type_name(types)}, got a boolean")
    if not isinstance(value, types):
        raise ValidationError(name, f"expected {_type_name(types)}, got {type(value).__name__}")


def _type_name(types: tuple) -> str:
    names = {int: "integer", float: "number", str: "string", bool: "boolean", list: "array", dict: "table"}
    if types == _NUM:
        return "number"
    return " or ".join(names[t] for t in types)


def _str_list(name: str, value: list) -> Tuple[str, ...]:
    if not all(isinstance(v, str) for v in value):
        raise ValidationError(name, "must be an array of strings")
    return tuple(value)


def parse_config(data: dict, base_dir: Path = Path("."), source_file: Optional[Path] = None) -> PipelineConfig:
    """Build a validated config from an already parsed TOML document."""
    _check_keys(data)
    sec = {name: data.get(name, {}) for name in _SCHEMA if name}

    def path(value: Optional[str]) -> Optional[Path]:
        if value is None:
            return None
        if value == "-":
            return Path("-")
        p = Path(value).expanduser()
        return p if p.is_absolute() else base_dir / p

    seed = data.get("seed", 0)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            seed = int(env_seed, 0)
        except ValueError:
            raise ValidationError(SEED_ENV, f"not an integer: {env_seed!r}") from None
    if not 0 <= seed < 2**64:
        raise ValidationError("seed", "must be an unsigned 64-bit integer")

    direction = data.get("direction", "en-is")
    bt_loop.check_direction(direction)
    stages = _str_list("stages", data.get("stages", list(DEFAULT_STAGES)))
    for s in stages:
        if s not in STAGES:
            raise ValidationError("stages", f"unknown stage {s!r}; expected one of {', '.join(STAGES)}")

    p = sec["paths"]
    fmt = p.get("format")
    if fmt is not None and fmt not in (PAIRED, TSV):
        raise ValidationError("paths.format", "must be 'paired' or 'tsv'")
    mono = {}
    for lang, value in p.get("mono", {}).items():
        if not isinstance(value, str):
            raise ValidationError(f"paths.mono.{lang}", "must be a string")
        mono[lang] = path(value)
    paths = PathsConfig(
        source=path(p.get("source")),
        target=path(p.get("target")),
        format=fmt,
        output_dir=path(p.get("output_dir", "out")),
        work_dir=path(p.get("work_dir")),
        mono=mono,
    )

    f = dict(sec["filter"])
    processes = f.pop("processes", 1)
    if processes < 1:
        raise ValidationError("filter.processes", "must be >= 1")
    utf8_errors = f.pop("utf8_errors", "replace")
    if utf8_errors not in ("replace", "strict"):
        raise ValidationError("filter.utf8_errors", "must be 'replace' or 'strict'")
    filter_kwargs = {}
    for side in ("source", "target"):
        preset = f.pop(f"charset_{side}", "en" if side == "source" else "is")
        extra = f.pop(f"charset_{side}_extra", "")
        try:
            filter_kwargs[f"charset_{side}"] = charset_from_preset(preset, extra)
        except ValidationError as exc:
            raise ValidationError(f"filter.charset_{side}", str(exc).split(": ", 1)[1]) from None
    if "mojibake_table" in f:
        table = path(f.pop("mojibake_table"))
        try:
            filter_kwargs["mojibake_table"] = MojibakeTable.from_file(table)
        except OSError as exc:
            raise ValidationError("filter.mojibake_table", f"cannot read {table}: {exc}") from None
    if "regex_fixes" in f:
        table = path(f.pop("regex_fixes"))
        try:
            filter_kwargs["custom_regex_fixes"] = RegexFixes.from_file(table)
        except OSError as exc:
            raise ValidationError("filter.regex_fixes", f"cannot read {table}: {exc}") from None
        except ValueError as exc:
            raise ValidationError("filter.regex_fixes", str(exc)) from None
    if "chain" in f:
        filter_kwargs["chain"] = _str_list("filter.chain", f.pop("chain"))
    filter_kwargs.update(f)
    filter_cfg = FilterConfig(**filter_kwargs)

    key_mode = sec["dedup"].get("key_mode", EXACT_PAIR)
    if key_mode not in KEY_MODES:
        raise ValidationError("dedup.key_mode", f"must be one of {', '.join(KEY_MODES)}")

    n = dict(sec["noise"])
    noise = None
    if n.pop("enabled", True):
        if "order" in n:
            n["order"] = _str_list("noise.order", n["order"])
        noise = NoiseConfig(seed=seed, **n)

    t = dict(sec["tag"])
    tag = TagSpec(**{k: v for k, v in t.items() if k != "enabled"}) if t.get("enabled", True) else None

    m = sec["mix"]
    mode = m.get("mode", MixSpec.mode)
    if mode not in MIX_MODES:
        raise ValidationError("mix.mode", f"must be one of {', '.join(MIX_MODES)}")
    mix = MixSpec.parse_ratio(m.get("ratio", "1:2"), mode=mode, shuffle_seed=seed)

    translator = None
    if sec["translator"]:
        tr = dict(sec["translator"])
        if "command" not in tr:
            raise ValidationError("translator.command", "required when [translator] is present")
        translator = TranslatorSpec(**tr)
    decode = DecodeParams(**sec["decode"])
    trainer = None
    if sec["trainer"]:
        if "command" not in sec["trainer"]:
            raise ValidationError("trainer.command", "required when [trainer] is present")
        trainer = TrainerSpec(**sec["trainer"])

    b = dict(sec["bt"])
    if "directions" in b:
        b["directions"] = _str_list("bt.directions", b["directions"])
        for d in b["directions"]:
            if set(bt_loop.check_direction(d)) != set(bt_loop.check_direction(direction)):
                raise ValidationError("bt.directions", f"{d} does not match direction {direction}")
    bt = BtOptions(**b)
    if bt.schedule not in (bt_loop.SIMULTANEOUS, bt_loop.PING_PONG):
        raise ValidationError("bt.schedule", "must be 'simultaneous' or 'ping-pong'")
    if bt.stop_mode not in (bt_loop.STOP_RULE, bt_loop.STOP_FORCE):
        raise ValidationError("bt.stop_mode", "must be 'rule' or 'force'")
    if bt.max_iterations < 1:
        raise ValidationError("bt.max_iterations", "must be >= 1")

    bl = sec["bleu"]
    bleu = BleuInputs(path(bl.get("hypotheses")), path(bl.get("references")), bl.get("lang"))

    return PipelineConfig(
        source_file=source_file,
        seed=seed,
        direction=direction,
        stages=stages,
        paths=paths,
        filter=filter_cfg,
        filter_processes=processes,
        utf8_errors=utf8_errors,
        dedup_key_mode=key_mode,
        noise=noise,
        tag=tag,
        mix=mix,
        translator=translator,
        decode=decode,
        trainer=trainer,
        bt=bt,
        bleu=bleu,
    )


def _line_col(text: str, exc: Exception) -> Tuple[int, int]:
    line = getattr(exc, "lineno", None)
    col = getattr(exc, "colno", None)
    if line is None:
        # older tomli: "... (at line 3, column 7)"
        import re

        m = re.search(r"line (\d+), column (\d+)", str(exc))
        if m:
            return int(m.group(1)), int(m.group(2))
        return 0, 0
    return line, col


def load_config(path, check_paths: bool = True) -> PipelineConfig:
    """Parse, default and validate a config file.

    With ``check_paths`` every referenced input file must exist.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ValidationError("config", f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = raw[: exc.start].count(b"\n") + 1
        col = exc.start - (raw.rfind(b"\n", 0, exc.start) + 1) + 1
        raise ParseError(path, line, col, "invalid UTF-8") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = _line_col(text, exc)
        msg = getattr(exc, "msg", None) or str(exc).split(" (at ")[0]
        raise ParseError(path, line, col, msg) from None
    cfg = parse_config(data, base_dir=path.resolve().parent, source_file=path)
    if check_paths:
        check_input_paths(cfg)
    return cfg


def check_input_paths(cfg: PipelineConfig) -> None:
    p = cfg.paths
    inputs = [("paths.source", p.source), ("paths.target", p.target)]
    inputs += [(f"paths.mono.{k}", v) for k, v in p.mono.items()]
    inputs += [("bleu.hypotheses", cfg.bleu.hypotheses), ("bleu.references", cfg.bleu.references)]
    for name, value in inputs:
        if value is not None and str(value) != "-" and not value.is_file():
            raise ValidationError(name, f"no such file: {value}")
    if p.target is not None and p.source is None:
        raise ValidationError("paths.source", "required when paths.target is set")
    if p.format == PAIRED and p.target is None:
        raise ValidationError("paths.target", "required for the paired format")
    if p.format == TSV and p.target is not None:
        raise ValidationError("paths.target", "not used with the tsv format")
