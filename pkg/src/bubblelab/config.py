"""Pipeline configuration and its key-value text serialisation.

The text format is one ``key = value`` pair per line, ``#`` comments allowed.
Keys are dotted paths into :class:`PipelineConfig` (``search.n_m``,
``filter.omega_min``, ...); values are JSON literals. Writing then reading a
config is lossless.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .drawdown import GridConfig
from .lppls import FilterConfig, SearchConfig


@dataclass(frozen=True)
class ThresholdConfig:
    long_lo: float = 0.95
    short_lo: float = 0.65


@dataclass(frozen=True)
class ShortBubbleFilter:
    min_days: int = 30
    min_size_pct: float = 25.0


@dataclass(frozen=True)
class StartTimeConfig:
    dt_min: int = 30
    dt_max: int = 720
    t1_step: int = 1


@dataclass(frozen=True)
class PipelineConfig:
    input: str = ""
    grid: GridConfig = field(default_factory=GridConfig)
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    short_filter: ShortBubbleFilter = field(default_factory=ShortBubbleFilter)
    search: SearchConfig = field(default_factory=SearchConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    start: StartTimeConfig = field(default_factory=StartTimeConfig)
    bands: tuple[str, ...] = ("short", "medium", "long")
    stride: int = 5
    forecast_offset: int = 10     # rows before the peak at which t2 is placed
    merge_timelines: bool = False  # frame long and short bubbles on one timeline
    count_open_drawup: bool = False
    seed: int = 0
    k_min: int = 2
    k_max: int = 10
    kmeans_restarts: int = 20
    standardize_clusters: bool = False
    workers: int = 1


def flatten(cfg: Any, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        key = prefix + f.name
        if dataclasses.is_dataclass(v):
            out.update(flatten(v, key + "."))
        else:
            out[key] = list(v) if isinstance(v, tuple) else v
    return out


def _coerce(template: Any, value: Any) -> Any:
    if isinstance(template, bool):
        if not isinstance(value, bool):
            raise ValueError(f"expected a boolean, got {value!r}")
        return value
    if isinstance(template, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"expected an integer, got {value!r}")
        return value
    if isinstance(template, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"expected a number, got {value!r}")
        return float(value)
    if isinstance(template, tuple):
        return tuple(value)
    if isinstance(template, str):
        return str(value)
    return value


def updated(cfg: Any, changes: dict[str, Any]) -> Any:
    """Return a copy of ``cfg`` with dotted-key overrides applied."""
    nested: dict[str, dict[str, Any]] = {}
    direct: dict[str, Any] = {}
    names = {f.name for f in dataclasses.fields(cfg)}
    for key, value in changes.items():
        head, _, rest = key.partition(".")
        if head not in names:
            raise KeyError(f"unknown config key {key!r}")
        if rest:
            nested.setdefault(head, {})[rest] = value
        else:
            current = getattr(cfg, head)
            if dataclasses.is_dataclass(current):
                raise KeyError(f"config key {key!r} names a section, not a value")
            direct[head] = _coerce(current, value)
    for head, sub in nested.items():
        direct[head] = updated(getattr(cfg, head), sub)
    return dataclasses.replace(cfg, **direct)


def to_text(cfg: PipelineConfig) -> str:
    lines = [f"{k} = {json.dumps(v)}" for k, v in flatten(cfg).items()]
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> dict[str, Any]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        try:
            out[key.strip()] = json.loads(value.strip())
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: bad value {value.strip()!r}") from exc
    return out


def from_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    return updated(base or PipelineConfig(), parse_text(text))


def load_config(path: str | Path, base: PipelineConfig | None = None) -> PipelineConfig:
    return from_text(Path(path).read_text(), base)


def save_config(cfg: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(to_text(cfg))


def config_hash(cfg: PipelineConfig) -> str:
    """SHA-256 of the serialised config, ignoring the input path and worker count."""
    flat = flatten(cfg)
    flat.pop("input", None)
    flat.pop("workers", None)
    return hashlib.sha256(json.dumps(flat, sort_keys=True).encode()).hexdigest()
