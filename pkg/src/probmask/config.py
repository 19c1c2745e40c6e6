"""Experiment configuration: built-in profiles, flat key=value files, overrides.

Precedence, lowest to highest: profile, config file, command-line flags.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .dataset import WindowConfig
from .mlp import TrainConfig
from .stft import StftConfig


def logit_spaced_alphas(lo: float = 0.001, hi: float = 0.999, num: int = 25) -> tuple[float, ...]:
    """Grid evenly spaced in log-odds, hence symmetric about 0.5."""
    z = np.linspace(np.log(lo / (1 - lo)), np.log(hi / (1 - hi)), num)
    grid = 1.0 / (1.0 + np.exp(-z))
    grid[0], grid[-1] = lo, hi
    return tuple(float(a) for a in grid)


@dataclass(frozen=True)
class ExperimentConfig:
    sample_rate: int = 4000
    window_len: int = 128
    hop: int = 8
    width: int = 10
    stride_train: int = 5
    stride_test: int = 1
    hidden: tuple[int, ...] = (650,)
    epochs: int = 60
    learning_rate: float = 0.02
    batch_size: int = 100
    loss: str = "cross_entropy"
    seed: int = 0
    shuffle: bool = True
    train_seconds: float = 30.0
    test_seconds: float = 5.0
    alpha_grid: tuple[float, ...] = field(default_factory=logit_spaced_alphas)
    filter_len: int = 512

    def __post_init__(self):
        if not all(0 < a < 1 for a in self.alpha_grid):
            raise ValueError("every alpha must lie in (0, 1)")
        if self.train_seconds <= 0 or self.test_seconds <= 0:
            raise ValueError("train_seconds and test_seconds must be positive")
        if self.filter_len < 1:
            raise ValueError("filter_len must be >= 1")
        # build the nested configs once so bad values fail here
        StftConfig(self.window_len, self.hop)
        WindowConfig(self.width, self.stride_train, self.stride_test, self.window_len // 2 + 1)
        TrainConfig(self.epochs, self.learning_rate, self.batch_size, self.loss, self.seed, self.shuffle)

    @property
    def stft(self) -> StftConfig:
        return StftConfig(self.window_len, self.hop)

    @property
    def window(self) -> WindowConfig:
        return WindowConfig(self.width, self.stride_train, self.stride_test, self.window_len // 2 + 1)

    @property
    def train(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.learning_rate, self.batch_size, self.loss,
                           self.seed, self.shuffle)

    @property
    def layer_dims(self) -> tuple[int, ...]:
        dim = self.window.dim
        return (dim, *self.hidden, dim)

    @property
    def train_samples(self) -> int:
        return int(round(self.train_seconds * self.sample_rate))

    @property
    def test_samples(self) -> int:
        return int(round(self.test_seconds * self.sample_rate))

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"


PROFILES = {
    "desk": {},
    "paper": dict(hop=1, width=20, stride_train=10, stride_test=1, hidden=(1300,),
                  epochs=600, train_seconds=120.0, test_seconds=10.0),
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(name: str, text: str):
    f = {f.name: f for f in dataclasses.fields(ExperimentConfig)}.get(name)
    if f is None:
        raise KeyError(f"unknown config key {name!r}")
    default = getattr(ExperimentConfig(), name)
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, tuple):
        item = int if name == "hidden" else float
        return tuple(item(part) for part in text.split(",") if part.strip())
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text.strip()


def parse_config_text(text: str) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = _coerce(key, value)
    return values


def resolve_config(profile: str = "desk", config_path=None, overrides: dict = None) -> ExperimentConfig:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    values = dict(PROFILES[profile])
    if config_path is not None:
        with open(config_path) as fh:
            values.update(parse_config_text(fh.read()))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig(**values)
