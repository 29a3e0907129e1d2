"""Pydantic request and response models for the hub API."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class LayerBlobDoc(BaseModel):
    weights_b64: str
    bias_b64: str


class CreateModelRequest(BaseModel):
    """Canonical model encoding plus the model name."""

    name: str
    architecture: dict
    compile: dict
    parameters: list[LayerBlobDoc]


class MetricsDoc(BaseModel):
    train_accuracy: float
    train_loss: float


class PushResultRequest(BaseModel):
    base_version: str = Field(description="version the participant trained from, as 'M.m.u'")
    sample_count: int
    metrics: MetricsDoc
    parameters: list[LayerBlobDoc]


class ControlRequest(BaseModel):
    """One manager command; unused arguments may be omitted."""

    model_config = ConfigDict(protected_namespaces=())

    action: str
    base_version: str | None = None
    contribution_ids: list[str] | None = None
    staleness_policy: str = "latest_only"
    new_name: str | None = None
    new_classes: int | None = None
    head_seed: int | None = None


class ModelListResponse(BaseModel):
    models: list[str]


class InfoResponse(BaseModel):
    name: str
    head: str
    versions: list[str]
    classes: int


class ContributionView(BaseModel):
    id: str
    participant_id: str
    base_version: str
    sample_count: int
    metrics: MetricsDoc
    status: str


class VersionRecordView(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_name: str
    version: str
    annotation: str
    parents: list[list[str]]
    created_at: str
    arch_ref: str
    params_ref: str
    merged_contributions: list[str] = []


class StatusResponse(BaseModel):
    name: str
    head: str
    pending: list[ContributionView]
    contributions: list[ContributionView]
    history: list[VersionRecordView]


class PushResultResponse(BaseModel):
    id: str
    head: str


class ControlResponse(BaseModel):
    action: str
    head: str
    new_model: VersionRecordView | None = None
    merged: list[str] | None = None
    ignored: list[str] | None = None


class ErrorResponse(BaseModel):
    error: str
