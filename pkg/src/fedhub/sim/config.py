"""Experiment configuration: a JSON file mirroring ExperimentConfig.

Schema (see README for a commented example):

    {
      "experiment": "single" | "scratch_vs_fork" | "fork_source",
      "name": "<used to derive output csv names>",
      "hub_address": "auto" | "http://host:port",
      "model_name": "...",
      "task": {"task_id", "input_dim", "num_classes", "modes_per_class",
               "shared_basis_seed", "noise_sigma"},
      "clients": 3, "rounds": 30, "samples_per_round": 256,
      "local_epochs": 2, "batch_size": 32, "learning_rate": 0.05,
      "seeds": [1, 2, 3, 4, 5],
      "target_accuracy": 0.85,
      "hidden_layers": [32, 16],
      "test_samples": 1000,
      "record_durations": false,
      "fork_source": {"model_name", "task", "rounds", "clients", "mode"},
      "sources": {"simple": {...}, "complex": {...}}   # fork_source experiment
    }

``hub_address: "auto"`` makes the harness start a private hub for the run.
When pointing at an external hub, ``manager_key`` and ``participant_keys``
(one key per client) must be given too.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..training import TaskSpec

EXPERIMENTS = ("single", "scratch_vs_fork", "fork_source")
FORK_MODES = ("all", "feature_only")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ForkSourceSpec:
    model_name: str
    task: TaskSpec
    rounds: int
    clients: int
    samples_per_round: int
    mode: str = "all"

    def __post_init__(self):
        if self.mode not in FORK_MODES:
            raise ConfigError(f"fork mode must be one of {FORK_MODES}, got {self.mode!r}")
        if self.rounds < 1 or self.clients < 1 or self.samples_per_round < 1:
            raise ConfigError("fork source rounds, clients, and samples must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    name: str
    hub_address: str
    model_name: str
    task: TaskSpec
    clients: int
    rounds: int
    samples_per_round: int
    local_epochs: int
    batch_size: int
    learning_rate: float
    seeds: tuple[int, ...]
    target_accuracy: float
    hidden_layers: tuple[int, ...] = (32, 16)
    test_samples: int = 1000
    record_durations: bool = False
    fork_source: ForkSourceSpec | None = None
    sources: dict[str, ForkSourceSpec] = field(default_factory=dict)
    manager_key: str | None = None
    participant_keys: tuple[str, ...] = ()

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.rounds < 1 or self.clients < 1:
            raise ConfigError("rounds and clients must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not 0 < self.target_accuracy <= 1:
            raise ConfigError("target_accuracy must lie in (0, 1]")
        if self.experiment == "scratch_vs_fork" and self.fork_source is None:
            raise ConfigError("scratch_vs_fork requires a fork_source section")
        if self.experiment == "fork_source" and set(self.sources) != {"simple", "complex"}:
            raise ConfigError("fork_source requires sources named 'simple' and 'complex'")


def _task_from_doc(doc: dict) -> TaskSpec:
    try:
        return TaskSpec(
            task_id=doc["task_id"],
            input_dim=int(doc["input_dim"]),
            num_classes=int(doc["num_classes"]),
            modes_per_class=int(doc["modes_per_class"]),
            shared_basis_seed=int(doc["shared_basis_seed"]),
            noise_sigma=float(doc["noise_sigma"]),
        )
    except KeyError as exc:
        raise ConfigError(f"task section is missing {exc}") from exc


def _fork_spec_from_doc(doc: dict, default_clients: int, default_samples: int) -> ForkSourceSpec:
    try:
        return ForkSourceSpec(
            model_name=doc["model_name"],
            task=_task_from_doc(doc["task"]),
            rounds=int(doc.get("rounds", 50)),
            clients=int(doc.get("clients", default_clients)),
            samples_per_round=int(doc.get("samples_per_round", default_samples)),
            mode=doc.get("mode", "all"),
        )
    except KeyError as exc:
        raise ConfigError(f"fork source section is missing {exc}") from exc


def config_from_doc(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    try:
        clients = int(doc["clients"])
        samples = int(doc["samples_per_round"])
        fork_source = (
            _fork_spec_from_doc(doc["fork_source"], clients, samples)
            if "fork_source" in doc else None
        )
        sources = {
            key: _fork_spec_from_doc(value, clients, samples)
            for key, value in doc.get("sources", {}).items()
        }
        return ExperimentConfig(
            experiment=doc.get("experiment", "single"),
            name=doc["name"],
            hub_address=doc.get("hub_address", "auto"),
            model_name=doc["model_name"],
            task=_task_from_doc(doc["task"]),
            clients=clients,
            rounds=int(doc["rounds"]),
            samples_per_round=samples,
            local_epochs=int(doc.get("local_epochs", 2)),
            batch_size=int(doc.get("batch_size", 32)),
            learning_rate=float(doc.get("learning_rate", 0.05)),
            seeds=tuple(int(s) for s in doc["seeds"]),
            target_accuracy=float(doc.get("target_accuracy", 0.85)),
            hidden_layers=tuple(int(h) for h in doc.get("hidden_layers", [32, 16])),
            test_samples=int(doc.get("test_samples", 1000)),
            record_durations=bool(doc.get("record_durations", False)),
            fork_source=fork_source,
            sources=sources,
            manager_key=doc.get("manager_key"),
            participant_keys=tuple(doc.get("participant_keys", [])),
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    return config_from_doc(doc)
