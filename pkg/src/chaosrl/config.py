"""Run configuration: YAML in, validated dataclasses out."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .analysis import LyapunovConfig
from .env import WorldConfig
from .learning import TdConfig
from .netcore import ActorInitConfig

CHAOTIC = "chaotic"
BASELINE = "baseline"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class LyapunovSettings:
    d_before: float = 1e-6
    warmup: int = 100
    perturbation_seeds: list[int] = field(default_factory=lambda: [0, 1, 2])

    def to_config(self, perturbation_seed: int) -> LyapunovConfig:
        return LyapunovConfig(d_before=self.d_before, warmup=self.warmup,
                              perturbation_seed=perturbation_seed)


@dataclass
class BaselineSettings:
    noise_std: float = 0.3
    n_hidden: int = 100
    init_range: float = 1.0


@dataclass
class RunConfig:
    method: str = CHAOTIC
    seeds: list[int] = field(default_factory=lambda: [1])
    episodes: int = 3000
    world: WorldConfig = field(default_factory=WorldConfig)
    td: TdConfig = field(default_factory=TdConfig)
    actor_init: ActorInitConfig = field(default_factory=ActorInitConfig)
    critic_init_range: float = 0.1
    baseline: BaselineSettings = field(default_factory=BaselineSettings)
    lyapunov: LyapunovSettings = field(default_factory=LyapunovSettings)
    checkpoint_every: int = 1000
    log_every: int = 0
    eval_episodes: int = 100
    output_dir: str = "runs/default"
    workers: int = 1

    def validate(self) -> None:
        def check(cond: bool, name: str, msg: str) -> None:
            if not cond:
                raise ConfigError(f"{name}: {msg}")

        check(self.method in (CHAOTIC, BASELINE), "method", f"must be '{CHAOTIC}' or '{BASELINE}'")
        check(isinstance(self.seeds, list) and len(self.seeds) > 0, "seeds", "must be a non-empty list")
        for s in self.seeds:
            check(isinstance(s, int) and not isinstance(s, bool) and s >= 0,
                  "seeds", f"entries must be non-negative integers, got {s!r}")
        check(len(set(self.seeds)) == len(self.seeds), "seeds", "must not repeat")
        check(self.episodes >= 1, "episodes", "must be >= 1")
        check(self.checkpoint_every >= 1, "checkpoint_every", "must be >= 1")
        check(self.log_every >= 0, "log_every", "must be >= 0")
        check(self.eval_episodes >= 0, "eval_episodes", "must be >= 0")
        check(self.workers >= 1, "workers", "must be >= 1")
        check(math.isfinite(self.critic_init_range) and self.critic_init_range > 0,
              "critic_init_range", "must be > 0")
        check(math.isfinite(self.baseline.noise_std) and self.baseline.noise_std > 0,
              "baseline.noise_std", "must be > 0")
        check(self.baseline.n_hidden >= 1, "baseline.n_hidden", "must be >= 1")
        check(math.isfinite(self.baseline.init_range) and self.baseline.init_range > 0,
              "baseline.init_range", "must be > 0")
        check(self.lyapunov.d_before > 0, "lyapunov.d_before", "must be > 0")
        check(self.lyapunov.warmup >= 0, "lyapunov.warmup", "must be >= 0")
        check(len(self.lyapunov.perturbation_seeds) > 0, "lyapunov.perturbation_seeds",
              "must be non-empty")
        for sub in (self.world, self.td, self.actor_init):
            try:
                sub.validate()
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["world"]["goal_center"] = list(self.world.goal_center)
        return d

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, excluding ``output_dir`` and ``workers``."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


_SECTIONS = {
    "world": WorldConfig,
    "td": TdConfig,
    "actor_init": ActorInitConfig,
    "baseline": BaselineSettings,
    "lyapunov": LyapunovSettings,
}


def _build(cls, data, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix}: expected a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        name = f"{prefix}.{key}" if prefix else key
        if key not in known:
            raise ConfigError(f"{name}: unknown field")
        if cls is RunConfig and key in _SECTIONS:
            value = _build(_SECTIONS[key], value or {}, key)
        else:
            default = getattr(cls(), key) if cls is not RunConfig else getattr(RunConfig(), key)
            value = _coerce(value, default, name)
        kwargs[key] = value
    return cls(**kwargs)


def _coerce(value, default, name: str):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
        return value
    if isinstance(default, (list, tuple)):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name}: expected a list, got {value!r}")
        return type(default)(value) if isinstance(default, tuple) else list(value)
    return value


def from_dict(data: dict) -> RunConfig:
    cfg = _build(RunConfig, data or {}, "")
    cfg.validate()
    return cfg


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from None
    return from_dict(data or {})
