"""Experiment configuration files.

Grammar (line oriented, UTF-8)::

    file     := line*
    line     := blank | comment | header | entry
    comment  := ('#' | ';') text
    header   := '[' name [' ' argument] ']'
    entry    := key '=' value

Sections:

``[experiment]`` (once)
    ``seed``, ``trials``, ``train_trials``, ``th_p``, ``th_beta``,
    ``dt_delay_ms``, ``grid_step``, ``approaches`` (comma separated),
    ``output_dir``, ``latch_lock``.
``[context <label>]`` (once per context)
    ``window_ms``.
``[classifier <cid>]`` (once per classifier)
    ``time_ms``, ``cost``, ``eer.<context>`` (target EER, required for every
    context), optional ``auth_prob.<context>`` overrides and optional
    ``norm_mu`` / ``norm_sigma`` (both or neither).
``[scenario]`` (optional, for loop traces)
    ``duration_ms``, ``seed``, and one or more
    ``segment = <start_ms>, <end_ms>, <context>, genuine|impostor[, reenroll]``.

Every validation error names the file, line and field.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .authloop import Scenario, Segment
from .synthdata import parse_approach
from .core import ConfigError

DEFAULT_APPROACHES = ("max", "sum", "cwma", "our_1x", "our_2x")


class ConfigFileError(ConfigError):
    def __init__(self, path, line: Optional[int], message: str):
        self.path, self.line, self.message = path, line, message
        where = f"{path}:{line}" if line else f"{path}"
        super().__init__(f"{where}: {message}")


@dataclass
class ClassifierConfig:
    cid: str
    time_ms: int = 500
    cost: float = 1.0
    eer: Dict[str, float] = field(default_factory=dict)
    auth_prob: Dict[str, float] = field(default_factory=dict)
    norm: Optional[Tuple[float, float]] = None


@dataclass
class ExperimentConfig:
    contexts: Dict[str, int]  # label -> window_ms, declaration order
    classifiers: Dict[str, ClassifierConfig]
    seed: int = 0
    trials: int = 10000
    train_trials: int = 1000
    th_p: float = 0.9
    th_beta: float = 0.0
    dt_delay_ms: int = 1000
    grid_step: float = 0.02
    approaches: Tuple[str, ...] = DEFAULT_APPROACHES
    output_dir: str = "results"
    latch_lock: bool = True
    scenario: Optional[Scenario] = None
    source_text: str = ""

    @property
    def cids(self) -> List[str]:
        return list(self.classifiers)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()


@dataclass
class _Entry:
    value: str
    line: int


@dataclass
class _Section:
    name: str
    arg: Optional[str]
    line: int
    entries: Dict[str, _Entry] = field(default_factory=dict)
    repeated: List[Tuple[str, _Entry]] = field(default_factory=list)


_REPEATABLE = {("scenario", "segment")}


def _tokenize(text: str, path) -> List[_Section]:
    sections: List[_Section] = []
    current: Optional[_Section] = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigFileError(path, no, f"unterminated section header {line!r}")
            name, _, arg = line[1:-1].strip().partition(" ")
            current = _Section(name.strip().lower(), arg.strip() or None, no)
            sections.append(current)
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigFileError(path, no, f"expected 'key = value', got {line!r}")
        if current is None:
            raise ConfigFileError(path, no, "entry before the first section header")
        key = key.strip()
        if not key:
            raise ConfigFileError(path, no, "empty key")
        entry = _Entry(value.strip(), no)
        if (current.name, key) in _REPEATABLE:
            current.repeated.append((key, entry))
        elif key in current.entries:
            raise ConfigFileError(path, no, f"duplicate key {key!r} (first set on line {current.entries[key].line})")
        else:
            current.entries[key] = entry
    return sections


class _Reader:
    """Typed access to a section's entries with line-numbered errors."""

    def __init__(self, section: _Section, path):
        self.s, self.path = section, path
        self.used = set()

    def fail(self, key, msg):
        line = self.s.entries[key].line if key in self.s.entries else self.s.line
        raise ConfigFileError(self.path, line, f"[{self.s.name}{' ' + self.s.arg if self.s.arg else ''}] {key}: {msg}")

    def raw(self, key, default=None, required=False):
        if key not in self.s.entries:
            if required:
                self.fail(key, "missing required field")
            return default
        self.used.add(key)
        return self.s.entries[key].value

    def int(self, key, default=None, required=False, minimum=None, strict_min=False):
        v = self.raw(key, None, required)
        if v is None:
            return default
        try:
            out = int(v)
        except ValueError:
            self.fail(key, f"expected an integer, got {v!r}")
        if minimum is not None and (out <= minimum if strict_min else out < minimum):
            self.fail(key, f"must be {'>' if strict_min else '>='} {minimum}, got {out}")
        return out

    def float(self, key, default=None, required=False, lo=None, hi=None, open_lo=False, open_hi=False):
        v = self.raw(key, None, required)
        if v is None:
            return default
        try:
            out = float(v)
        except ValueError:
            self.fail(key, f"expected a number, got {v!r}")
        if out != out or out in (float("inf"), float("-inf")):
            self.fail(key, f"must be finite, got {v!r}")
        if lo is not None and (out <= lo if open_lo else out < lo):
            self.fail(key, f"must be {'>' if open_lo else '>='} {lo}, got {out}")
        if hi is not None and (out >= hi if open_hi else out > hi):
            self.fail(key, f"must be {'<' if open_hi else '<='} {hi}, got {out}")
        return out

    def bool(self, key, default):
        v = self.raw(key)
        if v is None:
            return default
        low = v.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        self.fail(key, f"expected a boolean, got {v!r}")

    def check_unused(self, allowed_prefixes=()):
        for key, entry in self.s.entries.items():
            if key not in self.used and not key.startswith(allowed_prefixes):
                raise ConfigFileError(self.path, entry.line, f"[{self.s.name}] unknown field {key!r}")


def parse_config(text: str, path="<config>") -> ExperimentConfig:
    sections = _tokenize(text, path)
    experiment = [s for s in sections if s.name == "experiment"]
    contexts = [s for s in sections if s.name == "context"]
    classifiers = [s for s in sections if s.name == "classifier"]
    scenarios = [s for s in sections if s.name == "scenario"]
    for s in sections:
        if s.name not in ("experiment", "context", "classifier", "scenario"):
            raise ConfigFileError(path, s.line, f"unknown section [{s.name}]")
        if s.name in ("context", "classifier") and not s.arg:
            raise ConfigFileError(path, s.line, f"[{s.name}] needs a name, e.g. [{s.name} X]")
        if s.name in ("experiment", "scenario") and s.arg:
            raise ConfigFileError(path, s.line, f"[{s.name}] takes no name")
    for group, label in ((experiment, "experiment"), (scenarios, "scenario")):
        if len(group) > 1:
            raise ConfigFileError(path, group[1].line, f"section [{label}] given more than once")
    if not experiment:
        raise ConfigFileError(path, None, "missing [experiment] section")
    if not contexts:
        raise ConfigFileError(path, None, "no [context ...] sections")
    if not classifiers:
        raise ConfigFileError(path, None, "no [classifier ...] sections")

    ctx_windows: Dict[str, int] = {}
    for s in contexts:
        if s.arg in ctx_windows:
            raise ConfigFileError(path, s.line, f"context {s.arg!r} declared twice")
        r = _Reader(s, path)
        ctx_windows[s.arg] = r.int("window_ms", required=True, minimum=0, strict_min=True)
        r.check_unused()

    clfs: Dict[str, ClassifierConfig] = {}
    for s in classifiers:
        if s.arg in clfs:
            raise ConfigFileError(path, s.line, f"classifier {s.arg!r} declared twice")
        r = _Reader(s, path)
        cc = ClassifierConfig(
            s.arg,
            time_ms=r.int("time_ms", 500, minimum=0, strict_min=True),
            cost=r.float("cost", 1.0, lo=0.0),
        )
        for key in s.entries:
            prefix, dot, ctx = key.partition(".")
            if not dot or prefix not in ("eer", "auth_prob"):
                continue
            if ctx not in ctx_windows:
                r.fail(key, f"undeclared context {ctx!r}")
            if prefix == "eer":
                cc.eer[ctx] = r.float(key, lo=0.0, hi=0.5, open_lo=True, open_hi=True)
            else:
                cc.auth_prob[ctx] = r.float(key, lo=0.0, hi=1.0)
        for ctx in ctx_windows:
            if ctx not in cc.eer:
                r.fail(f"eer.{ctx}", "missing required field")
        mu = r.float("norm_mu")
        sigma = r.float("norm_sigma", lo=0.0, open_lo=True)
        if (mu is None) != (sigma is None):
            r.fail("norm_mu" if mu is None else "norm_sigma", "norm_mu and norm_sigma must be given together")
        if mu is not None:
            cc.norm = (mu, sigma)
        r.check_unused(allowed_prefixes=("eer.", "auth_prob."))
        clfs[s.arg] = cc

    r = _Reader(experiment[0], path)
    cfg = ExperimentConfig(
        contexts=ctx_windows,
        classifiers=clfs,
        seed=r.int("seed", 0, minimum=0),
        trials=r.int("trials", 10000, minimum=0, strict_min=True),
        train_trials=r.int("train_trials", 1000, minimum=2),
        th_p=r.float("th_p", 0.9, lo=0.0, hi=1.0),
        th_beta=r.float("th_beta", 0.0),
        dt_delay_ms=r.int("dt_delay_ms", 1000, minimum=0, strict_min=True),
        grid_step=r.float("grid_step", 0.02, lo=0.0, hi=1.0, open_lo=True),
        output_dir=r.raw("output_dir", "results"),
        latch_lock=r.bool("latch_lock", True),
        source_text=text,
    )
    n = round(1.0 / cfg.grid_step)
    if abs(n * cfg.grid_step - 1.0) > 1e-9:
        r.fail("grid_step", f"must divide 1 evenly, got {cfg.grid_step}")
    approaches = r.raw("approaches")
    if approaches is not None:
        names = tuple(a.strip() for a in approaches.split(",") if a.strip())
        if not names:
            r.fail("approaches", "empty list")
        for a in names:
            try:
                kind, arg = parse_approach(a)
            except ConfigError as exc:
                r.fail("approaches", str(exc))
            if kind == "single" and arg not in clfs:
                r.fail("approaches", f"unknown classifier in {a!r}")
        if len(set(names)) != len(names):
            r.fail("approaches", "duplicate approach")
        cfg.approaches = names
    r.check_unused()

    if scenarios:
        cfg.scenario = _parse_scenario(scenarios[0], path, ctx_windows, cfg.seed)
    return cfg


def _parse_scenario(s: _Section, path, ctx_windows, default_seed) -> Scenario:
    r = _Reader(s, path)
    duration = r.int("duration_ms", required=True, minimum=0, strict_min=True)
    seed = r.int("seed", default_seed, minimum=0)
    r.check_unused()
    if not s.repeated:
        raise ConfigFileError(path, s.line, "[scenario] needs at least one 'segment = ...' line")
    segments = []
    for _, entry in s.repeated:
        parts = [p.strip() for p in entry.value.split(",")]
        if len(parts) not in (4, 5):
            raise ConfigFileError(path, entry.line, "segment: expected 'start_ms, end_ms, context, genuine|impostor[, reenroll]'")
        try:
            start, end = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigFileError(path, entry.line, "segment: start_ms and end_ms must be integers") from None
        if parts[2] not in ctx_windows:
            raise ConfigFileError(path, entry.line, f"segment: undeclared context {parts[2]!r}")
        if parts[3] not in ("genuine", "impostor"):
            raise ConfigFileError(path, entry.line, f"segment: subject must be genuine or impostor, got {parts[3]!r}")
        if len(parts) == 5 and parts[4] != "reenroll":
            raise ConfigFileError(path, entry.line, f"segment: unknown flag {parts[4]!r}")
        segments.append((entry.line, Segment(start, end, parts[2], parts[3] == "genuine", len(parts) == 5)))
    try:
        return Scenario(duration, tuple(seg for _, seg in segments), seed)
    except ConfigError as exc:
        raise ConfigFileError(path, s.line, f"[scenario] {exc}") from None


def load_config(path) -> ExperimentConfig:
    """Read a config file; a bare name like ``unimodal`` resolves to a bundled config."""
    path = os.fspath(path)
    if not os.path.exists(path) and os.sep not in path:
        bundled = bundled_config_path(path)
        if bundled is not None:
            path = bundled
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, path)


def bundled_config_path(name: str) -> Optional[str]:
    stem = name[:-4] if name.endswith(".cfg") else name
    ref = importlib.resources.files("dynfusion") / "configs" / f"{stem}.cfg"
    return str(ref) if ref.is_file() else None
