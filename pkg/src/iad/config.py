"""Experiment configuration: a flat dotted-key namespace loaded from a simple
`key = value` text file, with CLI overrides. Values are JSON literals; bare
words fall back to strings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .losses import LossConfig
from .training import LOSSES, TrainConfig

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULTS"]


class ConfigError(ValueError):
    """A config file or override could not be parsed or validated."""


DEFAULTS: dict = {
    "seed": 0,
    "threads": 1,
    "loss": "iad",
    "arch": [32, 32],
    "data.kind": "blobs",          # blobs | csv | idx
    "data.classes": 3,
    "data.per_class": 1000,
    "data.side": 4.0,
    "data.spread": 0.6,
    "data.scale_unit": True,
    "data.test_fraction": 0.2,
    "data.csv": "",
    "data.idx_images": "",
    "data.idx_labels": "",
    "ood.radius_factor": 1.5,
    "ood.n": 1000,
    "attack.epsilons": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
    "eval.threshold_fraction": 0.95,
    "compare.losses": ["iad", "edl"],
    "verify.trials": 100,
    "verify.n_triples": 1000,
    "train.p_norm": 4.0,
    "train.lambda_max": 0.5,
    "train.t0": 10,
    "train.t_rate": 60,
    "train.learning_rate": 1e-3,
    "train.adam_beta1": 0.9,
    "train.adam_beta2": 0.999,
    "train.adam_eps": 1e-8,
    "train.batch_size": 32,
    "train.max_epochs": 200,
    "train.patience": 20,
    "train.val_fraction": 0.1,
    "train.kl_beta": 10.0,
}


def _parse_value(raw: str):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = dict(DEFAULTS)
        for key, val in self.values.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = val
        self.values = merged
        self._validate()

    def _validate(self):
        if self.values["loss"] not in LOSSES:
            raise ConfigError(f"loss: must be one of {sorted(LOSSES)}")
        for sel in self.values["compare.losses"]:
            if sel not in LOSSES:
                raise ConfigError(f"compare.losses: unknown selector {sel!r}")
        if self.values["data.kind"] not in ("blobs", "csv", "idx"):
            raise ConfigError("data.kind: must be blobs, csv or idx")
        arch = self.values["arch"]
        if not isinstance(arch, list) or not arch or any(
                not isinstance(h, int) or h < 1 for h in arch):
            raise ConfigError("arch: must be a non-empty list of positive ints")
        try:
            self.train_config()
            self.loss_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        values: dict = {}
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            values[key.strip()] = _parse_value(raw)
        if overrides:
            values.update(overrides)
        return cls(values)

    def __getitem__(self, key: str):
        return self.values[key]

    def train_config(self) -> TrainConfig:
        v = self.values
        return TrainConfig(
            p_norm=v["train.p_norm"],
            lambda_max=v["train.lambda_max"],
            t0=v["train.t0"],
            t_rate=v["train.t_rate"],
            learning_rate=v["train.learning_rate"],
            adam_beta1=v["train.adam_beta1"],
            adam_beta2=v["train.adam_beta2"],
            adam_eps=v["train.adam_eps"],
            batch_size=v["train.batch_size"],
            max_epochs=v["train.max_epochs"],
            patience=v["train.patience"],
            seed=v["seed"],
            val_fraction=v["train.val_fraction"],
            kl_beta=v["train.kl_beta"],
        )

    def loss_config(self) -> LossConfig:
        v = self.values
        return LossConfig(p_norm=v["train.p_norm"], lambda_max=v["train.lambda_max"],
                          kl_beta=v["train.kl_beta"])

    def resolved_text(self) -> str:
        lines = [f"{k} = {json.dumps(self.values[k])}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"
