"""The hub HTTP service.

Transport is HTTP/1.1 with UTF-8 JSON bodies under ``/api/v1``.  The five
protocol messages map onto endpoints as:

* GetInformation   -> GET  /models/{name}/info
* GetModel         -> GET  /models/{name}/versions/{version or "head"}
* PushTrainResult  -> POST /models/{name}/results
* GetStatus        -> GET  /models/{name}/status
* PushControl      -> POST /models/{name}/control

plus ``GET /models`` (listing) and ``POST /models`` (model creation).
Clients authenticate with the ``X-API-Key`` header; errors come back as
``{"error": "<code>"}`` with the mapped HTTP status.  Model downloads return
the canonical model encoding byte-for-byte, with the resolved version in the
``X-Model-Version`` response header.
"""

from __future__ import annotations

from dataclasses import dataclass

from fastapi import Depends, FastAPI, Header, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .. import core
from ..aggregation import StalenessPolicy
from ..errors import HubError, InvalidArgumentsError, ShapeMismatchError
from ..registry import Contribution, ModelVersionRecord, Registry, VersionId
from . import ops, schemas
from .auth import ApiKeyRecord, KeyTable, load_key_table

_STATUS_FOR_CODE = {
    "parse_error": 422,
    "invalid_model": 422,
    "shape_mismatch": 422,
    "invalid_arguments": 422,
    "invalid_name": 422,
    "empty_aggregation": 422,
    "model_exists": 409,
    "duplicate_contribution": 409,
    "stale_base": 409,
    "contribution_not_pending": 409,
    "model_not_found": 404,
    "version_not_found": 404,
    "unauthorized": 401,
    "forbidden": 403,
}


class ApiError(HubError):
    def __init__(self, code: str, message: str | None = None):
        self.code = code
        super().__init__(message)


def _contribution_view(c: Contribution) -> dict:
    return {
        "id": c.id,
        "participant_id": c.participant_id,
        "base_version": str(c.base_version),
        "sample_count": c.sample_count,
        "metrics": c.metrics,
        "status": c.status,
    }


def _record_view(r: ModelVersionRecord) -> dict:
    return {
        "model_name": r.model_name,
        "version": str(r.version),
        "annotation": r.annotation,
        "parents": [[name, str(ver)] for name, ver in r.parents],
        "created_at": r.created_at,
        "arch_ref": r.arch_ref,
        "params_ref": r.params_ref,
        "merged_contributions": list(r.merged_contributions),
    }


def _parse_version(text: str) -> VersionId | str:
    return "head" if text == "head" else VersionId.parse(text)


def create_app(registry: Registry, keys: KeyTable) -> FastAPI:
    app = FastAPI(title="fedhub", version="0.1.0", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )

    def principal(x_api_key: str | None = Header(default=None)) -> ApiKeyRecord:
        record = keys.lookup(x_api_key)
        if record is None:
            raise ApiError("unauthorized", "missing or unknown API key")
        return record

    def require_manager(who: ApiKeyRecord, model_name: str) -> None:
        if who.role != "manager":
            raise ApiError("forbidden", "manager role required")
        if not who.authorized_for(model_name):
            raise ApiError("forbidden", f"not authorized for model {model_name!r}")

    @app.exception_handler(HubError)
    async def hub_error_handler(_request: Request, exc: HubError):
        return JSONResponse(status_code=_STATUS_FOR_CODE.get(exc.code, 500),
                            content={"error": exc.code})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_request: Request, _exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": "invalid_arguments"})

    @app.get("/api/v1/models", response_model=schemas.ModelListResponse)
    def list_models(who: ApiKeyRecord = Depends(principal)):
        return {"models": registry.list_models()}

    @app.post("/api/v1/models", response_model=schemas.ControlResponse, status_code=201,
              response_model_exclude_none=True)
    def create_model(body: schemas.CreateModelRequest,
                     who: ApiKeyRecord = Depends(principal)):
        require_manager(who, body.name)
        arch = core.arch_from_doc(body.architecture)
        compile_info = core.compile_from_doc(body.compile)
        params = core.params_from_doc([doc.model_dump() for doc in body.parameters], arch)
        record = registry.create_model(body.name, arch, params, compile_info)
        return {"action": "create", "head": str(record.version),
                "new_model": _record_view(record)}

    @app.get("/api/v1/models/{name}/info", response_model=schemas.InfoResponse)
    def get_information(name: str, who: ApiKeyRecord = Depends(principal)):
        status = registry.get_status(name)
        arch = registry.model_arch(name)
        return {
            "name": name,
            "head": str(status.head),
            "versions": [str(r.version) for r in status.history],
            "classes": arch.num_classes,
        }

    @app.get("/api/v1/models/{name}/versions/{version}")
    def get_model(name: str, version: str, who: ApiKeyRecord = Depends(principal)):
        arch, params, compile_info, resolved = registry.get_model(name, _parse_version(version))
        body = core.serialize_model(arch, params, compile_info)
        return Response(content=body, media_type="application/json",
                        headers={"X-Model-Version": str(resolved)})

    @app.post("/api/v1/models/{name}/results", response_model=schemas.PushResultResponse)
    def push_train_result(name: str, body: schemas.PushResultRequest,
                          who: ApiKeyRecord = Depends(principal)):
        if not who.authorized_for(name):
            raise ApiError("forbidden", f"not authorized for model {name!r}")
        base = VersionId.parse(body.base_version)
        arch = registry.model_arch(name)
        params = core.params_from_doc([doc.model_dump() for doc in body.parameters], arch,
                                      shape_exc=ShapeMismatchError)
        contribution = registry.submit_contribution(
            name, base, params, body.sample_count,
            body.metrics.model_dump(), who.principal_id)
        return {"id": contribution.id, "head": str(registry.head(name))}

    @app.get("/api/v1/models/{name}/status", response_model=schemas.StatusResponse)
    def get_status(name: str, who: ApiKeyRecord = Depends(principal)):
        status = registry.get_status(name)
        return {
            "name": name,
            "head": str(status.head),
            "pending": [_contribution_view(c) for c in status.pending],
            "contributions": [_contribution_view(c) for c in status.contributions],
            "history": [_record_view(r) for r in status.history],
        }

    @app.post("/api/v1/models/{name}/control", response_model=schemas.ControlResponse,
              response_model_exclude_none=True)
    def push_control(name: str, body: schemas.ControlRequest,
                     who: ApiKeyRecord = Depends(principal)):
        require_manager(who, name)
        action = body.action
        if action == "merge":
            if body.base_version is None:
                raise InvalidArgumentsError("merge requires base_version")
            policy = StalenessPolicy(body.staleness_policy)
            record, merged, ignored = ops.perform_merge(
                registry, name, VersionId.parse(body.base_version),
                body.contribution_ids, policy)
            return {"action": action, "head": str(record.version),
                    "merged": merged, "ignored": ignored}
        if action == "ignore":
            if not body.contribution_ids:
                raise InvalidArgumentsError("ignore requires contribution_ids")
            registry.mark_ignored(name, body.contribution_ids)
            return {"action": action, "head": str(registry.head(name)),
                    "ignored": sorted(body.contribution_ids)}
        if action == "branch":
            if body.base_version is None:
                raise InvalidArgumentsError("branch requires base_version")
            record = registry.create_branch(name, VersionId.parse(body.base_version))
            return {"action": action, "head": str(record.version)}
        if action in ("fork_all", "fork_feature"):
            if body.new_name is None or body.base_version is None:
                raise InvalidArgumentsError(f"{action} requires new_name and base_version")
            require_manager(who, body.new_name)
            source_version = VersionId.parse(body.base_version)
            if action == "fork_all":
                record = registry.fork_all(name, source_version, body.new_name)
            else:
                if body.new_classes is None or body.head_seed is None:
                    raise InvalidArgumentsError("fork_feature requires new_classes and head_seed")
                record = registry.fork_feature_only(
                    name, source_version, body.new_name, body.new_classes, body.head_seed)
            return {"action": action, "head": str(record.version),
                    "new_model": _record_view(record)}
        raise InvalidArgumentsError(f"unknown control action {action!r}")

    return app


@dataclass
class ServiceConfig:
    data_dir: str
    key_file: str
    host: str = "127.0.0.1"
    port: int = 8377


def build_app(config: ServiceConfig) -> FastAPI:
    registry = Registry(config.data_dir)
    keys = load_key_table(config.key_file)
    return create_app(registry, keys)


def serve(config: ServiceConfig) -> None:
    """Run the hub until interrupted; all state changes are durable on return."""
    import uvicorn

    uvicorn.run(build_app(config), host=config.host, port=config.port, log_level="warning")
