"""fedhub: a GitHub-style hub for federated-learning models.

Model managers publish, branch, fork and merge versioned dense-network
models; participants download them, train locally, and push contributions
the manager aggregates by sample-weighted averaging.
"""

__version__ = "0.1.0"

from .core import (
    CompileInfo,
    LayerSpec,
    ModelArchitecture,
    ParameterSet,
    deserialize_model,
    init_parameters,
    serialize_model,
    shape_check,
)
from .registry import Contribution, ModelVersionRecord, Registry, VersionId

__all__ = [
    "CompileInfo",
    "Contribution",
    "LayerSpec",
    "ModelArchitecture",
    "ModelVersionRecord",
    "ParameterSet",
    "Registry",
    "VersionId",
    "deserialize_model",
    "init_parameters",
    "serialize_model",
    "shape_check",
    "__version__",
]
