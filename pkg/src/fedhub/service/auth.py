"""API-key authentication and per-model authorization.

Keys live in a static JSON file: a list of records with ``key``,
``principal_id``, ``role`` (manager or participant) and
``authorized_models`` (fnmatch-style name patterns).  Managers may use every
endpoint on models they are authorized for; participants get read access
everywhere plus result pushes on their authorized models.
"""

from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass

ROLES = ("manager", "participant")
MIN_KEY_LENGTH = 16


@dataclass(frozen=True)
class ApiKeyRecord:
    key: str
    principal_id: str
    role: str
    authorized_models: tuple[str, ...]

    def __post_init__(self):
        if len(self.key) < MIN_KEY_LENGTH:
            raise ValueError(f"API key for {self.principal_id!r} is shorter than "
                             f"{MIN_KEY_LENGTH} characters")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r} for {self.principal_id!r}")

    def authorized_for(self, model_name: str) -> bool:
        return any(fnmatch.fnmatchcase(model_name, pattern)
                   for pattern in self.authorized_models)


class KeyTable:
    def __init__(self, records: list[ApiKeyRecord]):
        self._by_key: dict[str, ApiKeyRecord] = {}
        for record in records:
            if record.key in self._by_key:
                raise ValueError("duplicate API key in key file")
            self._by_key[record.key] = record

    def lookup(self, key: str | None) -> ApiKeyRecord | None:
        if not key:
            return None
        return self._by_key.get(key)


def load_key_table(path: str) -> KeyTable:
    with open(path, "r", encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise ValueError("key file must hold a JSON array of key records")
    records = [
        ApiKeyRecord(
            key=entry["key"],
            principal_id=entry["principal_id"],
            role=entry["role"],
            authorized_models=tuple(entry.get("authorized_models", [])),
        )
        for entry in entries
    ]
    return KeyTable(records)
