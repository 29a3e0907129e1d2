"""HTTP client for the hub: the call surface a participant or manager uses.

Wraps httpx; every method talks to the wire protocol only, so anything built
on this class (the CLI, the simulation harness, tests) exercises the same
path a remote user would.
"""

from __future__ import annotations

import httpx

from . import core
from .core import CompileInfo, ModelArchitecture, ParameterSet
from .errors import HubError
from .registry import VersionId


class HubHTTPError(HubError):
    def __init__(self, status_code: int, code: str):
        self.status_code = status_code
        self.code = code
        super().__init__(f"hub returned {status_code}: {code}")


class HubClient:
    def __init__(self, base_url: str, api_key: str, timeout: float = 30.0,
                 transport: httpx.BaseTransport | None = None):
        self._http = httpx.Client(
            base_url=base_url.rstrip("/") + "/api/v1",
            headers={"X-API-Key": api_key},
            timeout=timeout,
            transport=transport,
        )

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "HubClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _check(self, response: httpx.Response) -> httpx.Response:
        if response.status_code >= 400:
            try:
                code = response.json().get("error", "internal_error")
            except ValueError:
                code = "internal_error"
            raise HubHTTPError(response.status_code, code)
        return response

    # -- reads ---------------------------------------------------------------

    def list_models(self) -> list[str]:
        return self._check(self._http.get("/models")).json()["models"]

    def get_information(self, name: str) -> dict:
        return self._check(self._http.get(f"/models/{name}/info")).json()

    def get_model_bytes(self, name: str, version: str = "head") -> tuple[bytes, VersionId]:
        response = self._check(self._http.get(f"/models/{name}/versions/{version}"))
        return response.content, VersionId.parse(response.headers["X-Model-Version"])

    def get_model(self, name: str, version: str = "head"
                  ) -> tuple[ModelArchitecture, ParameterSet, CompileInfo, VersionId]:
        body, resolved = self.get_model_bytes(name, version)
        arch, params, compile_info = core.deserialize_model(body)
        return arch, params, compile_info, resolved

    def get_status(self, name: str) -> dict:
        return self._check(self._http.get(f"/models/{name}/status")).json()

    # -- writes --------------------------------------------------------------

    def create_model(self, name: str, arch: ModelArchitecture, params: ParameterSet,
                     compile_info: CompileInfo) -> dict:
        body = {
            "name": name,
            "architecture": core.arch_doc(arch),
            "compile": core.compile_doc(compile_info),
            "parameters": core.params_doc(params),
        }
        return self._check(self._http.post("/models", json=body)).json()

    def push_train_result(self, name: str, base_version: VersionId | str,
                          params: ParameterSet, sample_count: int, metrics: dict) -> dict:
        body = {
            "base_version": str(base_version),
            "sample_count": sample_count,
            "metrics": metrics,
            "parameters": core.params_doc(params),
        }
        return self._check(self._http.post(f"/models/{name}/results", json=body)).json()

    def control(self, name: str, action: str, **arguments) -> dict:
        body = {"action": action, **arguments}
        return self._check(self._http.post(f"/models/{name}/control", json=body)).json()

    def merge(self, name: str, base_version: VersionId | str,
              contribution_ids: list[str] | None = None,
              staleness_policy: str = "latest_only") -> dict:
        extra = {} if contribution_ids is None else {"contribution_ids": contribution_ids}
        return self.control(name, "merge", base_version=str(base_version),
                            staleness_policy=staleness_policy, **extra)

    def ignore(self, name: str, contribution_ids: list[str]) -> dict:
        return self.control(name, "ignore", contribution_ids=contribution_ids)

    def branch(self, name: str, base_version: VersionId | str) -> dict:
        return self.control(name, "branch", base_version=str(base_version))

    def fork_all(self, source: str, source_version: VersionId | str, new_name: str) -> dict:
        return self.control(source, "fork_all", base_version=str(source_version),
                            new_name=new_name)

    def fork_feature_only(self, source: str, source_version: VersionId | str, new_name: str,
                          new_classes: int, head_seed: int) -> dict:
        return self.control(source, "fork_feature", base_version=str(source_version),
                            new_name=new_name, new_classes=new_classes, head_seed=head_seed)
