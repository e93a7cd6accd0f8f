"""Run configuration: flat ``key=value`` or JSON-object files."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .ecc import PageCodec
from .errors import ConfigError, SanisimError
from .ftl import Ftl
from .nand import Device, GeometryConfig

FORMATS = ("csv", "md", "json")
_GEOMETRY_KEYS = {f.name for f in fields(GeometryConfig)}


@dataclass(frozen=True)
class RunConfig:
    blocks_per_device: int = 16
    wordlines_per_block: int = 8
    bits_per_cell: int = 2
    main_bits_per_page: int = 2048
    spare_bits_per_page: int = 256
    nop_limit: int = 4
    erase_endurance: int = 1000
    p_disturb: float = 1e-3
    q_pulse: float = 0.3
    p_read_noise: float = 1e-5
    m: int = 10
    t: int = 5
    segments: int = 4
    free_threshold: int | None = None
    op_reserve: float = 0.125
    retries: int = 5
    seed: int = 0
    format: str = "csv"

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.retries < 0:
            raise ConfigError("retries must be >= 0")
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ConfigError("seed must be a u64")
        if not 0.0 <= self.op_reserve < 1.0:
            raise ConfigError("op_reserve must be a fraction in [0, 1)")
        if self.free_threshold is not None and self.free_threshold < 0:
            raise ConfigError("free_threshold must be >= 0")
        try:
            self.geometry.validate()
            self.codec()
        except SanisimError as exc:
            raise ConfigError(str(exc)) from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def geometry(self) -> GeometryConfig:
        return GeometryConfig(**{k: getattr(self, k) for k in _GEOMETRY_KEYS})

    def codec(self) -> PageCodec:
        g = self.geometry
        return PageCodec.build(self.m, self.t, self.segments, g.main_bits_per_page, g.spare_bits_per_page)

    def build(self) -> Ftl:
        """Fresh device plus translation layer."""
        return Ftl(Device(self.geometry, self.seed), self.codec(), self.free_threshold, self.op_reserve, self.retries)

    def with_overrides(self, **changes) -> RunConfig:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


def _coerce(name: str, raw, kind):
    if raw is None or (isinstance(raw, str) and raw.lower() in ("none", "null", "")):
        if "None" in str(kind):
            return None
        raise ConfigError(f"{name} needs a value")
    try:
        if "int" in str(kind):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            if isinstance(raw, bool):
                raise ValueError
            return int(raw)
        if "float" in str(kind):
            return float(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def config_from_mapping(values: dict) -> RunConfig:
    kinds = {f.name: f.type for f in fields(RunConfig)}
    unknown = sorted(set(values) - set(kinds))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return RunConfig(**{k: _coerce(k, v, kinds[k]) for k, v in values.items()})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str) -> RunConfig:
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            values = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError("JSON config must be an object")
        return config_from_mapping(values)
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return config_from_mapping(values)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
