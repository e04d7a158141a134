"""Run configuration: nested dataclasses loaded from YAML with field-named errors."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import yaml

from .cooperative import CoopConfig
from .evo import EvoConfig
from .mllm import ModelEndpoint
from .tasks import OperatorConfig, SetTaskConfig


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.field = path


@dataclass(frozen=True)
class NetworkConfig:
    name: str | None = None
    path: str | None = None


@dataclass(frozen=True)
class SparsifySection:
    strategies: tuple[str, ...] = ("degree", "community")
    n_nodes: int = 50
    n_edges: int = 100
    seed: int = 0


@dataclass(frozen=True)
class MllmSection:
    endpoint: ModelEndpoint = field(default_factory=ModelEndpoint)
    cassette: str | None = None
    cassette_mode: str = "live"

    def __post_init__(self):
        if self.cassette_mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown cassette_mode {self.cassette_mode!r}")
        if self.cassette_mode != "live" and not self.cassette:
            raise ValueError("cassette path required for record/replay")


@dataclass(frozen=True)
class RunConfig:
    task: str = "im"
    mode: str = "coop"
    network: NetworkConfig = field(default_factory=NetworkConfig)
    sparsify: SparsifySection = field(default_factory=SparsifySection)
    evo: EvoConfig = field(default_factory=EvoConfig)
    coop: CoopConfig = field(default_factory=CoopConfig)
    operator: OperatorConfig = field(default_factory=OperatorConfig)
    mllm: MllmSection = field(default_factory=MllmSection)
    seeds: tuple[int, ...] = tuple(range(1, 11))
    p: float = 0.05
    mc_trials: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.task not in ("im", "immunization"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.mode not in ("single", "coop"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def set_task_config(self, seed: int) -> SetTaskConfig:
        s = self.sparsify
        return SetTaskConfig(
            s.strategies, s.n_nodes, s.n_edges, s.seed, self.mode,
            dataclasses.replace(self.evo, rng_seed=seed), self.coop, self.operator, self.p, self.mc_trials,
        )


def _convert(tp, value, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if dataclasses.is_dataclass(tp):
        return from_dict(tp, value, path)
    if origin is typing.Union or type(tp).__name__ == "UnionType":
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, path)
    if origin is tuple:
        if isinstance(value, int) and path.endswith("seeds"):
            return tuple(range(1, value + 1))
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        return tuple(_convert(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    return value


def from_dict(cls, data, path: str = ""):
    """Build dataclass ``cls`` from a mapping, rejecting unknown keys."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown field")
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        kwargs[name] = _convert(hints[name], value, sub)
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path or cls.__name__, str(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("", f"invalid YAML in {path}: {exc}") from exc
    return from_dict(RunConfig, data)


def to_dict(obj):
    """Plain-data view of a config for manifests."""
    if dataclasses.is_dataclass(obj):
        return {f.name: to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.init}
    if isinstance(obj, (list, tuple)):
        return [to_dict(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    return obj
