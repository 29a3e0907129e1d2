"""Versioned model store: a per-model DAG of versions persisted append-only.

Layout on disk is one directory per model holding ``events.ndjson`` (one
event per line, sorted keys) and ``blobs/`` with content-addressed parameter
and architecture blobs named by their lowercase hex SHA-256.  A blob is made
durable before the event that references it, and replay ignores a trailing
partial line, so a crash can lose at most the event being written.

Version numbering: ``create`` and both fork flavors start a model at
(1,0,0); ``branch`` opens the next minor line at (major, head.minor+1, 0);
``merge`` bumps micro on the head.  Minor therefore counts federated rounds
and micro counts merges within a round.  Branching is allowed from any
existing version (the re-branch path for stale results); the new record's
parent is the chosen base while its minor always lands above the current
head, keeping the head monotone.

Concurrency: one write lock per model serializes all mutations of that
model; forks take the source lock and the global name-table lock.  Reads
take the model lock only long enough to snapshot references.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import re
import threading
from dataclasses import dataclass, field, replace

from . import core
from .core import CompileInfo, ModelArchitecture, ParameterSet
from .errors import (
    ContributionNotPendingError,
    DuplicateContributionError,
    HubError,
    InvalidArgumentsError,
    InvalidNameError,
    ModelExistsError,
    ModelNotFoundError,
    ParseError,
    ShapeMismatchError,
    StaleBaseError,
    VersionNotFoundError,
)

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]{0,127}$")

ANNOTATIONS = ("created", "merged", "branched", "forked_all", "forked_feature")
EVENT_KINDS = ("create", "branch", "fork", "contribution", "merge", "ignore")
CONTRIBUTION_STATUSES = ("pending", "merged", "ignored")


@dataclass(frozen=True, order=True)
class VersionId:
    major: int
    minor: int
    micro: int

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.micro}"

    @classmethod
    def parse(cls, text: str) -> "VersionId":
        m = re.fullmatch(r"(\d+)\.(\d+)\.(\d+)", text)
        if not m:
            raise InvalidArgumentsError(f"bad version string {text!r}")
        return cls(int(m.group(1)), int(m.group(2)), int(m.group(3)))


ROOT_VERSION = VersionId(1, 0, 0)


@dataclass(frozen=True)
class ModelVersionRecord:
    model_name: str
    version: VersionId
    arch_ref: str
    params_ref: str
    compile_info: CompileInfo
    parents: tuple[tuple[str, VersionId], ...]
    created_at: str
    annotation: str
    merged_contributions: tuple[str, ...] = ()

    def to_doc(self) -> dict:
        doc = {
            "model_name": self.model_name,
            "version": str(self.version),
            "arch_ref": self.arch_ref,
            "params_ref": self.params_ref,
            "compile": core.compile_doc(self.compile_info),
            "parents": [[name, str(ver)] for name, ver in self.parents],
            "created_at": self.created_at,
            "annotation": self.annotation,
        }
        if self.annotation == "merged":
            doc["merged_contributions"] = list(self.merged_contributions)
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "ModelVersionRecord":
        return cls(
            model_name=doc["model_name"],
            version=VersionId.parse(doc["version"]),
            arch_ref=doc["arch_ref"],
            params_ref=doc["params_ref"],
            compile_info=core.compile_from_doc(doc["compile"]),
            parents=tuple((name, VersionId.parse(ver)) for name, ver in doc["parents"]),
            created_at=doc["created_at"],
            annotation=doc["annotation"],
            merged_contributions=tuple(doc.get("merged_contributions", ())),
        )


@dataclass(frozen=True)
class Contribution:
    id: str
    model_name: str
    base_version: VersionId
    params_ref: str
    sample_count: int
    metrics: dict
    participant_id: str
    status: str = "pending"

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "model_name": self.model_name,
            "base_version": str(self.base_version),
            "params_ref": self.params_ref,
            "sample_count": self.sample_count,
            "metrics": dict(self.metrics),
            "participant_id": self.participant_id,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Contribution":
        return cls(
            id=doc["id"],
            model_name=doc["model_name"],
            base_version=VersionId.parse(doc["base_version"]),
            params_ref=doc["params_ref"],
            sample_count=doc["sample_count"],
            metrics=dict(doc["metrics"]),
            participant_id=doc["participant_id"],
        )


@dataclass(frozen=True)
class ModelStatus:
    name: str
    head: VersionId
    pending: tuple[Contribution, ...]
    contributions: tuple[Contribution, ...]
    history: tuple[ModelVersionRecord, ...]


@dataclass
class _ModelState:
    name: str
    records: dict[VersionId, ModelVersionRecord] = field(default_factory=dict)
    record_order: list[VersionId] = field(default_factory=list)
    contributions: dict[str, Contribution] = field(default_factory=dict)
    contribution_order: list[str] = field(default_factory=list)
    dedup: set[tuple[str, VersionId]] = field(default_factory=set)
    next_seq: int = 1
    next_contribution: int = 1

    @property
    def head(self) -> VersionId:
        return max(self.records)


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _validate_metrics(metrics: dict) -> dict:
    if not isinstance(metrics, dict) or set(metrics) != {"train_accuracy", "train_loss"}:
        raise InvalidArgumentsError("metrics must hold exactly train_accuracy and train_loss")
    acc, loss = metrics["train_accuracy"], metrics["train_loss"]
    if not isinstance(acc, (int, float)) or isinstance(acc, bool) or not 0.0 <= float(acc) <= 1.0:
        raise InvalidArgumentsError(f"train_accuracy must lie in [0, 1], got {acc!r}")
    if not isinstance(loss, (int, float)) or isinstance(loss, bool) or not float(loss) >= 0.0:
        raise InvalidArgumentsError(f"train_loss must be >= 0, got {loss!r}")
    return {"train_accuracy": float(acc), "train_loss": float(loss)}


class Registry:
    """Append-only registry of versioned models.

    All state is rebuilt from the event logs under ``data_dir`` at
    construction; every mutating method validates, persists blobs, then
    appends exactly one event per state transition.
    """

    def __init__(self, data_dir: str | os.PathLike, durable: bool = True):
        self.data_dir = str(data_dir)
        self.durable = durable
        self._table_lock = threading.RLock()
        self._locks: dict[str, threading.RLock] = {}
        self._models: dict[str, _ModelState] = {}
        os.makedirs(self.data_dir, exist_ok=True)
        self._replay_all()

    # -- locking ------------------------------------------------------------

    def _lock_for(self, name: str) -> threading.RLock:
        with self._table_lock:
            if name not in self._locks:
                self._locks[name] = threading.RLock()
            return self._locks[name]

    # -- paths and persistence ----------------------------------------------

    def _model_dir(self, name: str) -> str:
        return os.path.join(self.data_dir, name)

    def _events_path(self, name: str) -> str:
        return os.path.join(self._model_dir(name), "events.ndjson")

    def _blob_path(self, name: str, ref: str) -> str:
        return os.path.join(self._model_dir(name), "blobs", ref)

    def _store_blob(self, name: str, data: bytes) -> str:
        ref = core.sha256_hex(data)
        path = self._blob_path(name, ref)
        if os.path.exists(path):
            return ref
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            if self.durable:
                os.fsync(fh.fileno())
        os.replace(tmp, path)
        return ref

    def _load_blob(self, name: str, ref: str) -> bytes:
        try:
            with open(self._blob_path(name, ref), "rb") as fh:
                return fh.read()
        except FileNotFoundError as exc:
            raise HubError(f"missing blob {ref} for model {name}") from exc

    def _append_event(self, state: _ModelState, kind: str, payload: dict) -> dict:
        event = {"sequence_no": state.next_seq, "kind": kind, "payload": payload}
        line = json.dumps(event, sort_keys=True, separators=(",", ":"), allow_nan=False)
        os.makedirs(self._model_dir(state.name), exist_ok=True)
        with open(self._events_path(state.name), "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            if self.durable:
                os.fsync(fh.fileno())
        state.next_seq += 1
        return event

    # -- replay ---------------------------------------------------------------

    def _replay_all(self) -> None:
        names = sorted(
            entry for entry in os.listdir(self.data_dir)
            if os.path.isfile(self._events_path(entry))
        )
        for name in names:
            state = self._replay_model(name)
            if state.records:
                self._models[name] = state
        # cross-model parents (forks) must reference versions that exist
        for state in self._models.values():
            for record in state.records.values():
                for parent_name, parent_version in record.parents:
                    parent_state = self._models.get(parent_name)
                    if parent_state is None or parent_version not in parent_state.records:
                        raise ParseError(
                            f"event log for {state.name!r} references missing "
                            f"parent {parent_name}@{parent_version}")

    def _replay_model(self, name: str) -> _ModelState:
        state = _ModelState(name)
        path = self._events_path(name)
        with open(path, "rb") as fh:
            raw = fh.read()
        offset = 0
        valid = 0
        terminated = True
        while offset < len(raw):
            newline = raw.find(b"\n", offset)
            if newline == -1:
                chunk, next_offset, has_newline = raw[offset:], len(raw), False
            else:
                chunk, next_offset, has_newline = raw[offset:newline], newline + 1, True
            if chunk:
                try:
                    event = json.loads(chunk.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    break  # torn tail from a crash
                self._apply_event(state, event)
            offset = next_offset
            valid = next_offset
            terminated = has_newline
        # repair the tail so later appends stay line-aligned
        if valid < len(raw):
            with open(path, "r+b") as fh:
                fh.truncate(valid)
        elif raw and not terminated:
            with open(path, "ab") as fh:
                fh.write(b"\n")
        return state

    def _apply_event(self, state: _ModelState, event: dict) -> None:
        if event.get("sequence_no") != state.next_seq:
            raise ParseError(f"event log for {state.name!r} is out of sequence")
        kind, payload = event.get("kind"), event.get("payload")
        if kind in ("create", "branch", "fork", "merge"):
            record = ModelVersionRecord.from_doc(payload)
            if record.version in state.records:
                raise ParseError(f"duplicate version {record.version} in log for {state.name!r}")
            for parent_name, parent_version in record.parents:
                if parent_name == state.name and parent_version not in state.records:
                    raise ParseError(f"forward parent reference in log for {state.name!r}")
            state.records[record.version] = record
            state.record_order.append(record.version)
            if kind == "merge":
                for cid in record.merged_contributions:
                    contribution = state.contributions.get(cid)
                    if contribution is None or contribution.status != "pending":
                        raise ParseError(f"merge of unknown or settled contribution {cid!r}")
                    state.contributions[cid] = replace(contribution, status="merged")
        elif kind == "contribution":
            contribution = Contribution.from_doc(payload)
            state.contributions[contribution.id] = contribution
            state.contribution_order.append(contribution.id)
            state.dedup.add((contribution.participant_id, contribution.base_version))
            state.next_contribution += 1
        elif kind == "ignore":
            for cid in payload["ids"]:
                contribution = state.contributions.get(cid)
                if contribution is None or contribution.status != "pending":
                    raise ParseError(f"ignore of unknown or settled contribution {cid!r}")
                state.contributions[cid] = replace(contribution, status="ignored")
        else:
            raise ParseError(f"unknown event kind {kind!r} in log for {state.name!r}")
        state.next_seq += 1

    # -- lookups ----------------------------------------------------------------

    def _state(self, name: str) -> _ModelState:
        state = self._models.get(name)
        if state is None:
            raise ModelNotFoundError(f"no model named {name!r}")
        return state

    def _record(self, state: _ModelState, version: VersionId) -> ModelVersionRecord:
        record = state.records.get(version)
        if record is None:
            raise VersionNotFoundError(f"model {state.name!r} has no version {version}")
        return record

    def list_models(self) -> list[str]:
        with self._table_lock:
            return sorted(self._models)

    def head(self, name: str) -> VersionId:
        with self._lock_for(name):
            return self._state(name).head

    def model_arch(self, name: str) -> ModelArchitecture:
        with self._lock_for(name):
            state = self._state(name)
            record = state.records[state.head]
        return core.arch_from_blob(self._load_blob(name, record.arch_ref))

    # -- operations ---------------------------------------------------------------

    def create_model(self, name: str, arch: ModelArchitecture, params: ParameterSet,
                     compile_info: CompileInfo) -> ModelVersionRecord:
        if not _NAME_RE.match(name or ""):
            raise InvalidNameError(f"bad model name {name!r}")
        if not core.shape_check(arch, params):
            raise ShapeMismatchError("initial parameters do not match architecture")
        with self._table_lock:
            if name in self._models:
                raise ModelExistsError(f"model {name!r} already exists")
            with self._lock_for(name):
                state = _ModelState(name)
                arch_ref = self._store_blob(name, core.arch_blob(arch))
                params_ref = self._store_blob(name, core.params_blob(params))
                record = ModelVersionRecord(
                    model_name=name, version=ROOT_VERSION, arch_ref=arch_ref,
                    params_ref=params_ref, compile_info=compile_info, parents=(),
                    created_at=_utc_now(), annotation="created")
                self._append_event(state, "create", record.to_doc())
                state.records[record.version] = record
                state.record_order.append(record.version)
                self._models[name] = state
                return record

    def create_branch(self, name: str, base: VersionId) -> ModelVersionRecord:
        with self._lock_for(name):
            state = self._state(name)
            base_record = self._record(state, base)
            head = state.head
            version = VersionId(base.major, head.minor + 1, 0)
            record = ModelVersionRecord(
                model_name=name, version=version, arch_ref=base_record.arch_ref,
                params_ref=base_record.params_ref, compile_info=base_record.compile_info,
                parents=((name, base),), created_at=_utc_now(), annotation="branched")
            self._append_event(state, "branch", record.to_doc())
            state.records[version] = record
            state.record_order.append(version)
            return record

    def _fork_common(self, source_name: str, source_version: VersionId, new_name: str):
        if not _NAME_RE.match(new_name or ""):
            raise InvalidNameError(f"bad model name {new_name!r}")
        source_state = self._state(source_name)
        source_record = self._record(source_state, source_version)
        if new_name in self._models:
            raise ModelExistsError(f"model {new_name!r} already exists")
        return source_record

    def fork_all(self, source_name: str, source_version: VersionId,
                 new_name: str) -> ModelVersionRecord:
        with self._table_lock, self._lock_for(source_name):
            source_record = self._fork_common(source_name, source_version, new_name)
            arch_bytes = self._load_blob(source_name, source_record.arch_ref)
            params_bytes = self._load_blob(source_name, source_record.params_ref)
            with self._lock_for(new_name):
                state = _ModelState(new_name)
                arch_ref = self._store_blob(new_name, arch_bytes)
                params_ref = self._store_blob(new_name, params_bytes)
                record = ModelVersionRecord(
                    model_name=new_name, version=ROOT_VERSION, arch_ref=arch_ref,
                    params_ref=params_ref, compile_info=source_record.compile_info,
                    parents=((source_name, source_version),), created_at=_utc_now(),
                    annotation="forked_all")
                self._append_event(state, "fork", record.to_doc())
                state.records[record.version] = record
                state.record_order.append(record.version)
                self._models[new_name] = state
                return record

    def fork_feature_only(self, source_name: str, source_version: VersionId, new_name: str,
                          new_classes: int, head_seed: int) -> ModelVersionRecord:
        if not isinstance(new_classes, int) or isinstance(new_classes, bool) or new_classes < 1:
            raise InvalidArgumentsError(f"new_classes must be a positive integer, got {new_classes!r}")
        if not isinstance(head_seed, int) or isinstance(head_seed, bool) or not 0 <= head_seed < 2**64:
            raise InvalidArgumentsError(f"head_seed must be a 64-bit unsigned integer, got {head_seed!r}")
        with self._table_lock, self._lock_for(source_name):
            source_record = self._fork_common(source_name, source_version, new_name)
            arch = core.arch_from_blob(self._load_blob(source_name, source_record.arch_ref))
            params = core.params_from_blob(
                self._load_blob(source_name, source_record.params_ref), arch)

            boundary = arch.prediction_boundary
            head_specs = list(arch.prediction_layers)
            last = head_specs[-1]
            head_specs[-1] = core.LayerSpec(last.input_dim, new_classes, last.activation)
            head_arch = ModelArchitecture(tuple(head_specs), head_specs[0].input_dim, 0)
            head_params = core.init_parameters(head_arch, head_seed)

            new_arch = ModelArchitecture(arch.feature_layers + tuple(head_specs),
                                         arch.input_dim, boundary)
            new_params = ParameterSet(params.layers[:boundary] + head_params.layers)

            with self._lock_for(new_name):
                state = _ModelState(new_name)
                arch_ref = self._store_blob(new_name, core.arch_blob(new_arch))
                params_ref = self._store_blob(new_name, core.params_blob(new_params))
                record = ModelVersionRecord(
                    model_name=new_name, version=ROOT_VERSION, arch_ref=arch_ref,
                    params_ref=params_ref, compile_info=source_record.compile_info,
                    parents=((source_name, source_version),), created_at=_utc_now(),
                    annotation="forked_feature")
                self._append_event(state, "fork", record.to_doc())
                state.records[record.version] = record
                state.record_order.append(record.version)
                self._models[new_name] = state
                return record

    def submit_contribution(self, name: str, base_version: VersionId, params: ParameterSet,
                            sample_count: int, metrics: dict,
                            participant_id: str) -> Contribution:
        if not isinstance(sample_count, int) or isinstance(sample_count, bool) or sample_count < 1:
            raise InvalidArgumentsError(f"sample_count must be >= 1, got {sample_count!r}")
        metrics = _validate_metrics(metrics)
        with self._lock_for(name):
            state = self._state(name)
            base_record = self._record(state, base_version)
            arch = core.arch_from_blob(self._load_blob(name, base_record.arch_ref))
            if not core.shape_check(arch, params):
                raise ShapeMismatchError("contributed parameters do not match the model architecture")
            if (participant_id, base_version) in state.dedup:
                raise DuplicateContributionError(
                    f"{participant_id!r} already contributed to {name}@{base_version}")
            params_ref = self._store_blob(name, core.params_blob(params))
            contribution = Contribution(
                id=f"{name}:c{state.next_contribution:06d}", model_name=name,
                base_version=base_version, params_ref=params_ref,
                sample_count=sample_count, metrics=metrics, participant_id=participant_id)
            self._append_event(state, "contribution", contribution.to_doc())
            state.contributions[contribution.id] = contribution
            state.contribution_order.append(contribution.id)
            state.dedup.add((participant_id, base_version))
            state.next_contribution += 1
            return contribution

    def record_merge(self, name: str, base: VersionId, merged_params: ParameterSet,
                     merged_ids: list[str]) -> ModelVersionRecord:
        if not merged_ids:
            raise InvalidArgumentsError("record_merge needs at least one contribution id")
        with self._lock_for(name):
            state = self._state(name)
            base_record = self._record(state, base)
            if base != state.head:
                raise StaleBaseError(f"merge base {base} is not the head {state.head}")
            for cid in merged_ids:
                contribution = state.contributions.get(cid)
                if contribution is None or contribution.status != "pending":
                    raise ContributionNotPendingError(f"contribution {cid!r} is not pending")
                # a contribution merges at `base` when trained from it, or from a
                # version holding byte-identical parameters (the re-branch path)
                contribution_base = self._record(state, contribution.base_version)
                if (contribution.base_version != base
                        and contribution_base.params_ref != base_record.params_ref):
                    raise ContributionNotPendingError(
                        f"contribution {cid!r} was trained from {contribution.base_version}, "
                        f"whose parameters differ from merge base {base}")
            arch = core.arch_from_blob(self._load_blob(name, base_record.arch_ref))
            if not core.shape_check(arch, merged_params):
                raise ShapeMismatchError("merged parameters do not match the model architecture")
            params_ref = self._store_blob(name, core.params_blob(merged_params))
            record = ModelVersionRecord(
                model_name=name, version=VersionId(base.major, base.minor, base.micro + 1),
                arch_ref=base_record.arch_ref, params_ref=params_ref,
                compile_info=base_record.compile_info, parents=((name, base),),
                created_at=_utc_now(), annotation="merged",
                merged_contributions=tuple(sorted(merged_ids)))
            self._append_event(state, "merge", record.to_doc())
            state.records[record.version] = record
            state.record_order.append(record.version)
            for cid in record.merged_contributions:
                state.contributions[cid] = replace(state.contributions[cid], status="merged")
            return record

    def mark_ignored(self, name: str, ids: list[str]) -> int:
        if not ids:
            return 0
        with self._lock_for(name):
            state = self._state(name)
            for cid in ids:
                contribution = state.contributions.get(cid)
                if contribution is None or contribution.status != "pending":
                    raise ContributionNotPendingError(f"contribution {cid!r} is not pending")
            self._append_event(state, "ignore", {"ids": sorted(ids)})
            for cid in ids:
                state.contributions[cid] = replace(state.contributions[cid], status="ignored")
            return len(ids)

    def get_model(self, name: str, version: VersionId | str = "head"
                  ) -> tuple[ModelArchitecture, ParameterSet, CompileInfo, VersionId]:
        with self._lock_for(name):
            state = self._state(name)
            resolved = state.head if version == "head" else version
            if not isinstance(resolved, VersionId):
                raise InvalidArgumentsError(f"bad version {version!r}")
            record = self._record(state, resolved)
        arch = core.arch_from_blob(self._load_blob(name, record.arch_ref))
        params = core.params_from_blob(self._load_blob(name, record.params_ref), arch)
        return arch, params, record.compile_info, resolved

    def get_status(self, name: str) -> ModelStatus:
        with self._lock_for(name):
            state = self._state(name)
            ordered = tuple(state.contributions[cid] for cid in state.contribution_order)
            return ModelStatus(
                name=name,
                head=state.head,
                pending=tuple(c for c in ordered if c.status == "pending"),
                contributions=ordered,
                history=tuple(state.records[v] for v in sorted(state.records)),
            )

    def get_contribution(self, name: str, cid: str) -> Contribution:
        with self._lock_for(name):
            state = self._state(name)
            contribution = state.contributions.get(cid)
            if contribution is None:
                raise ContributionNotPendingError(f"unknown contribution {cid!r}")
            return contribution

    def contribution_params(self, name: str, cid: str) -> ParameterSet:
        contribution = self.get_contribution(name, cid)
        arch = self.model_arch(name)
        return core.params_from_blob(self._load_blob(name, contribution.params_ref), arch)

    def version_params(self, name: str, version: VersionId) -> ParameterSet:
        with self._lock_for(name):
            state = self._state(name)
            record = self._record(state, version)
        arch = core.arch_from_blob(self._load_blob(name, record.arch_ref))
        return core.params_from_blob(self._load_blob(name, record.params_ref), arch)

    # -- introspection for fidelity checks -------------------------------------

    def snapshot(self) -> dict:
        """Deep, JSON-compatible image of all in-memory state."""
        out = {}
        with self._table_lock:
            names = sorted(self._models)
        for name in names:
            with self._lock_for(name):
                state = self._models[name]
                out[name] = {
                    "records": [state.records[v].to_doc() for v in state.record_order],
                    "contributions": [
                        dict(state.contributions[cid].to_doc(), status=state.contributions[cid].status)
                        for cid in state.contribution_order
                    ],
                    "head": str(state.head),
                    "next_seq": state.next_seq,
                }
        return out
