"""Orchestrates federated experiments against a hub over the wire protocol.

The harness never touches the registry in-process: the manager and every
simulated participant act through :class:`~fedhub.client.HubClient`, so a
full experiment is also an end-to-end exercise of the protocol.  Clients
within a round train and push concurrently; the manager's branch and merge
steps are strictly sequential.

Per-round data sampling, shuffle order, and initialization are all derived
from the experiment seed with stable labelled hashes, so arms sharing a seed
train on identical per-round data (paired comparison) and a rerun of the
same config reproduces identical CSV rows.
"""

from __future__ import annotations

import csv
import json
import os
import secrets
import socket
import statistics
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..client import HubClient
from ..core import CompileInfo, LayerSpec, ModelArchitecture, init_parameters
from ..registry import VersionId
from ..training import TaskSpec, derive_seed, evaluate, generate_task, train_local
from .config import ExperimentConfig, ForkSourceSpec

CSV_HEADER = ["round", "arm", "seed", "test_accuracy", "test_loss", "head_version", "duration_ms"]
TRAIN_CSV_HEADER = ["round", "arm", "seed", "train_accuracy"]


@dataclass
class RoundMetrics:
    round_index: int
    head_version: VersionId
    client_metrics: list[dict]
    test_accuracy: float
    test_loss: float
    duration_ms: float

    @property
    def mean_train_accuracy(self) -> float:
        return sum(m["train_accuracy"] for m in self.client_metrics) / len(self.client_metrics)


# ---------------------------------------------------------------------------
# Local hub lifecycle


class LocalHub:
    """A private hub instance on loopback, served by uvicorn in a thread."""

    def __init__(self, workdir: str, clients: int):
        self.workdir = workdir
        self.data_dir = os.path.join(workdir, "hub-data")
        self.key_file = os.path.join(workdir, "keys.json")
        self.manager_key = "manager-" + secrets.token_hex(12)
        self.participant_keys = [
            f"participant-{i:02d}-" + secrets.token_hex(12) for i in range(clients)
        ]
        self.address: str | None = None
        self._server = None
        self._thread: threading.Thread | None = None

    def _write_keys(self) -> None:
        entries = [{"key": self.manager_key, "principal_id": "manager",
                    "role": "manager", "authorized_models": ["*"]}]
        for i, key in enumerate(self.participant_keys):
            entries.append({"key": key, "principal_id": f"client-{i:02d}",
                            "role": "participant", "authorized_models": ["*"]})
        os.makedirs(self.workdir, exist_ok=True)
        with open(self.key_file, "w", encoding="utf-8") as fh:
            json.dump(entries, fh, indent=2)

    def start(self) -> "LocalHub":
        import uvicorn

        from ..registry import Registry
        from ..service.app import create_app
        from ..service.auth import load_key_table

        self._write_keys()
        os.makedirs(self.data_dir, exist_ok=True)
        app = create_app(Registry(self.data_dir), load_key_table(self.key_file))
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self._thread.start()
        deadline = time.monotonic() + 15
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("local hub failed to start")
            time.sleep(0.01)
        sock: socket.socket = self._server.servers[0].sockets[0]
        self.address = f"http://127.0.0.1:{sock.getsockname()[1]}"
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=10)

    def __enter__(self) -> "LocalHub":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


# ---------------------------------------------------------------------------
# Federated rounds


def build_architecture(task: TaskSpec, hidden_layers: tuple[int, ...]) -> ModelArchitecture:
    dims = [task.input_dim, *hidden_layers]
    layers = [LayerSpec(dims[i], dims[i + 1], "relu") for i in range(len(dims) - 1)]
    layers.append(LayerSpec(dims[-1], task.num_classes, "softmax"))
    return ModelArchitecture(tuple(layers), task.input_dim, len(hidden_layers))


@dataclass
class FederatedRun:
    """One arm of an experiment: a model being trained over the wire."""

    manager: HubClient
    participants: list[HubClient]
    model_name: str
    task: TaskSpec
    config: ExperimentConfig
    seed: int
    samples_per_round: int = 0
    test_data: object = None
    history: list[RoundMetrics] = field(default_factory=list)

    def __post_init__(self):
        if self.samples_per_round <= 0:
            self.samples_per_round = self.config.samples_per_round
        if self.test_data is None:
            self.test_data = generate_task(
                self.task, self.config.test_samples,
                derive_seed("test", self.seed, self.task.task_id))

    def _client_step(self, client_index: int, round_index: int) -> dict:
        client = self.participants[client_index]
        arch, params, compile_info, version = client.get_model(self.model_name, "head")
        data = generate_task(
            self.task, self.samples_per_round,
            derive_seed("data", self.seed, round_index, client_index, self.task.task_id))
        trained, metrics = train_local(
            arch, params, data, compile_info,
            epochs=self.config.local_epochs, batch_size=self.config.batch_size,
            seed=derive_seed("shuffle", self.seed, round_index, client_index))
        client.push_train_result(self.model_name, version, trained,
                                 sample_count=len(data), metrics=metrics)
        return metrics

    def run_round(self, round_index: int) -> RoundMetrics:
        """Branch, train all clients concurrently, merge, evaluate."""
        started = time.monotonic()
        head = VersionId.parse(self.manager.get_information(self.model_name)["head"])
        branch_head = VersionId.parse(
            self.manager.branch(self.model_name, head)["head"])
        expected = VersionId(head.major, head.minor + 1, 0)
        if branch_head != expected:
            raise RuntimeError(f"round {round_index}: branch produced {branch_head}, "
                               f"expected {expected}")

        with ThreadPoolExecutor(max_workers=len(self.participants)) as pool:
            client_metrics = list(pool.map(
                lambda ci: self._client_step(ci, round_index),
                range(len(self.participants))))

        merged_head = VersionId.parse(
            self.manager.merge(self.model_name, branch_head)["head"])
        if merged_head != VersionId(branch_head.major, branch_head.minor, 1):
            raise RuntimeError(f"round {round_index}: merge produced {merged_head}")

        arch, params, _, _ = self.manager.get_model(self.model_name, "head")
        scores = evaluate(arch, params, self.test_data)
        duration = (time.monotonic() - started) * 1000.0
        metrics = RoundMetrics(
            round_index=round_index,
            head_version=merged_head,
            client_metrics=client_metrics,
            test_accuracy=scores["accuracy"],
            test_loss=scores["loss"],
            duration_ms=duration if self.config.record_durations else 0.0,
        )
        self.history.append(metrics)
        return metrics

    def run(self, rounds: int) -> list[RoundMetrics]:
        for round_index in range(1, rounds + 1):
            self.run_round(round_index)
        return self.history


# ---------------------------------------------------------------------------
# Experiments


class _Session:
    """Connections for one run: a manager plus per-client participants."""

    def __init__(self, address: str, manager_key: str, participant_keys: list[str]):
        self.manager = HubClient(address, manager_key)
        self.participants = [HubClient(address, key) for key in participant_keys]

    def close(self) -> None:
        self.manager.close()
        for client in self.participants:
            client.close()


def _train_model(session: _Session, config: ExperimentConfig, model_name: str,
                 task: TaskSpec, seed: int, rounds: int, clients: int,
                 init_label: str, samples_per_round: int = 0) -> FederatedRun:
    arch = build_architecture(task, config.hidden_layers)
    params = init_parameters(arch, derive_seed("init", seed, init_label))
    compile_info = CompileInfo("sgd", config.learning_rate, "cross_entropy")
    session.manager.create_model(model_name, arch, params, compile_info)
    run = FederatedRun(session.manager, session.participants[:clients],
                       model_name, task, config, seed,
                       samples_per_round=samples_per_round)
    run.run(rounds)
    return run


def _continue_model(session: _Session, config: ExperimentConfig, model_name: str,
                    task: TaskSpec, seed: int) -> FederatedRun:
    return FederatedRun(session.manager, session.participants[:config.clients],
                        model_name, task, config, seed)


def _fork_model(session: _Session, config: ExperimentConfig, source: ForkSourceSpec,
                source_model: str, new_name: str, seed: int) -> None:
    head = session.manager.get_information(source_model)["head"]
    if source.mode == "all":
        session.manager.fork_all(source_model, head, new_name)
    else:
        session.manager.fork_feature_only(
            source_model, head, new_name,
            new_classes=config.task.num_classes,
            head_seed=derive_seed("fork-head", seed, new_name))


def run_experiment_scratch_vs_fork(config: ExperimentConfig, address: str,
                                   manager_key: str, participant_keys: list[str]) -> dict:
    """Train a source task, fork it, and race the fork against a fresh model."""
    rows: list[dict] = []
    rounds_to_target: dict[str, dict[int, int | None]] = {"scratch": {}, "fork": {}}
    source = config.fork_source
    assert source is not None

    for seed in config.seeds:
        session = _Session(address, manager_key, participant_keys)
        try:
            source_model = f"{source.model_name}-s{seed}"
            _train_model(session, config, source_model, source.task, seed,
                         source.rounds, source.clients, "source",
                         samples_per_round=source.samples_per_round)

            fork_model = f"{config.model_name}-fork-s{seed}"
            _fork_model(session, config, source, source_model, fork_model, seed)
            scratch_model = f"{config.model_name}-scratch-s{seed}"

            arms = {
                "scratch": _train_model(session, config, scratch_model, config.task,
                                        seed, config.rounds, config.clients, "scratch"),
                "fork": _continue_model(session, config, fork_model, config.task, seed),
            }
            arms["fork"].run(config.rounds)

            for arm, run in arms.items():
                rows.extend(_rows_for(run, arm, seed))
                rounds_to_target[arm][seed] = _first_round_reaching(
                    run.history, config.target_accuracy)
        finally:
            session.close()

    return {
        "experiment": "scratch_vs_fork",
        "rows": rows,
        "rounds_to_target": rounds_to_target,
        "median_rounds_to_target": {
            arm: _median_censored(list(per_seed.values()), config.rounds)
            for arm, per_seed in rounds_to_target.items()
        },
        "train_accuracy": {},
    }


def run_experiment_fork_source(config: ExperimentConfig, address: str,
                               manager_key: str, participant_keys: list[str]) -> dict:
    """Race scratch vs forks of a simple and a complex source on one target task."""
    rows: list[dict] = []
    train_rows: list[dict] = []
    train_curves: dict[str, dict[int, list[float]]] = {
        "scratch": {}, "fork_simple": {}, "fork_complex": {}}

    for seed in config.seeds:
        session = _Session(address, manager_key, participant_keys)
        try:
            forks: dict[str, str] = {}
            for label in ("simple", "complex"):
                source = config.sources[label]
                source_model = f"{source.model_name}-s{seed}"
                _train_model(session, config, source_model, source.task, seed,
                             source.rounds, source.clients, f"source-{label}",
                             samples_per_round=source.samples_per_round)
                forks[label] = f"{config.model_name}-fork-{label}-s{seed}"
                _fork_model(session, config, source, source_model, forks[label], seed)

            scratch_model = f"{config.model_name}-scratch-s{seed}"
            arms = {
                "scratch": _train_model(session, config, scratch_model, config.task,
                                        seed, config.rounds, config.clients, "scratch"),
                "fork_simple": _continue_model(session, config, forks["simple"],
                                               config.task, seed),
                "fork_complex": _continue_model(session, config, forks["complex"],
                                                config.task, seed),
            }
            arms["fork_simple"].run(config.rounds)
            arms["fork_complex"].run(config.rounds)

            for arm, run in arms.items():
                rows.extend(_rows_for(run, arm, seed))
                curve = [m.mean_train_accuracy for m in run.history]
                train_curves[arm][seed] = curve
                train_rows.extend(
                    {"round": m.round_index, "arm": arm, "seed": seed,
                     "train_accuracy": repr(m.mean_train_accuracy)}
                    for m in run.history)
        finally:
            session.close()

    return {
        "experiment": "fork_source",
        "rows": rows,
        "train_rows": train_rows,
        "train_accuracy": train_curves,
        "rounds_to_target": {},
        "median_rounds_to_target": {},
    }


def run_experiment_single(config: ExperimentConfig, address: str,
                          manager_key: str, participant_keys: list[str]) -> dict:
    rows: list[dict] = []
    for seed in config.seeds:
        session = _Session(address, manager_key, participant_keys)
        try:
            run = _train_model(session, config, f"{config.model_name}-s{seed}",
                               config.task, seed, config.rounds, config.clients, "scratch")
            rows.extend(_rows_for(run, "single", seed))
        finally:
            session.close()
    return {"experiment": "single", "rows": rows,
            "rounds_to_target": {}, "median_rounds_to_target": {}, "train_accuracy": {}}


def _rows_for(run: FederatedRun, arm: str, seed: int) -> list[dict]:
    return [
        {
            "round": m.round_index,
            "arm": arm,
            "seed": seed,
            "test_accuracy": repr(m.test_accuracy),
            "test_loss": repr(m.test_loss),
            "head_version": str(m.head_version),
            "duration_ms": str(int(round(m.duration_ms))),
        }
        for m in run.history
    ]


def _first_round_reaching(history: list[RoundMetrics], target: float) -> int | None:
    for m in history:
        if m.test_accuracy >= target:
            return m.round_index
    return None


def _median_censored(values: list[int | None], budget: int) -> float:
    # a run that never reached the target counts as budget + 1 rounds
    return statistics.median(budget + 1 if v is None else v for v in values)


def write_curves_csv(path: str, rows: list[dict], header: list[str] | None = None) -> None:
    header = header or CSV_HEADER
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def run_config(config: ExperimentConfig, output_dir: str = ".") -> dict:
    """Execute an experiment config end to end and write its CSV outputs."""
    runners = {
        "single": run_experiment_single,
        "scratch_vs_fork": run_experiment_scratch_vs_fork,
        "fork_source": run_experiment_fork_source,
    }
    runner = runners[config.experiment]

    hub: LocalHub | None = None
    try:
        if config.hub_address == "auto":
            hub = LocalHub(os.path.join(output_dir, f"{config.name}-hub"),
                           config.clients).start()
            address, manager_key = hub.address, hub.manager_key
            participant_keys = hub.participant_keys
        else:
            if not config.manager_key or len(config.participant_keys) < config.clients:
                raise ValueError("external hub needs manager_key and one participant key per client")
            address, manager_key = config.hub_address, config.manager_key
            participant_keys = list(config.participant_keys)

        report = runner(config, address, manager_key, participant_keys)
    finally:
        if hub is not None:
            hub.stop()

    os.makedirs(output_dir, exist_ok=True)
    curves_path = os.path.join(output_dir, f"{config.name}_curves.csv")
    write_curves_csv(curves_path, report["rows"])
    report["curves_csv"] = curves_path
    if report.get("train_rows"):
        train_path = os.path.join(output_dir, f"{config.name}_train_curves.csv")
        write_curves_csv(train_path, report["train_rows"], TRAIN_CSV_HEADER)
        report["train_curves_csv"] = train_path
    return report
