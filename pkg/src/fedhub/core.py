"""Model representation and its canonical encoding.

A model is a dense feed-forward classifier described by three values:

* :class:`ModelArchitecture`, an ordered list of layers with a boundary that
  splits feature layers from prediction layers,
* :class:`ParameterSet`, one (weights, bias) float32 pair per layer,
* :class:`CompileInfo`, the optimizer settings clients train with.

The canonical encoding is a UTF-8 JSON document with sorted keys and no
insignificant whitespace; weight blobs are base64 of little-endian IEEE-754
32-bit floats in row-major order.  Serialization is therefore deterministic
and round-trip byte-stable, which the registry relies on for content
addressing.

Weight initialization uses numpy's PCG64 generator (``default_rng``), so a
given 64-bit seed always reproduces the same bit pattern within this
implementation.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidModelError, ParseError, ShapeMismatchError

ACTIVATIONS = ("relu", "softmax", "identity")
OPTIMIZERS = ("sgd",)
LOSSES = ("cross_entropy",)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidModelError(message)


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: output = activation(W @ x + b)."""

    input_dim: int
    output_dim: int
    activation: str

    def __post_init__(self):
        _require(isinstance(self.input_dim, int) and not isinstance(self.input_dim, bool)
                 and self.input_dim >= 1,
                 f"layer input_dim must be a positive integer, got {self.input_dim!r}")
        _require(isinstance(self.output_dim, int) and not isinstance(self.output_dim, bool)
                 and self.output_dim >= 1,
                 f"layer output_dim must be a positive integer, got {self.output_dim!r}")
        _require(self.activation in ACTIVATIONS,
                 f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class ModelArchitecture:
    """Layer chain plus the index of the first prediction layer.

    Layers at index >= ``prediction_boundary`` form the prediction head;
    layers below it are the transferable feature extractor.
    """

    layers: tuple[LayerSpec, ...]
    input_dim: int
    prediction_boundary: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        _require(len(self.layers) >= 1, "architecture needs at least one layer")
        _require(isinstance(self.input_dim, int) and self.input_dim >= 1,
                 f"input_dim must be a positive integer, got {self.input_dim!r}")
        _require(self.layers[0].input_dim == self.input_dim,
                 "first layer input_dim must equal architecture input_dim")
        for i in range(len(self.layers) - 1):
            _require(self.layers[i].output_dim == self.layers[i + 1].input_dim,
                     f"layer {i} output_dim does not chain into layer {i + 1}")
            _require(self.layers[i].activation != "softmax",
                     "softmax is only permitted on the final layer")
        _require(isinstance(self.prediction_boundary, int)
                 and 0 <= self.prediction_boundary < len(self.layers),
                 f"prediction_boundary {self.prediction_boundary!r} out of range")

    @property
    def num_classes(self) -> int:
        return self.layers[-1].output_dim

    @property
    def feature_layers(self) -> tuple[LayerSpec, ...]:
        return self.layers[: self.prediction_boundary]

    @property
    def prediction_layers(self) -> tuple[LayerSpec, ...]:
        return self.layers[self.prediction_boundary:]


def _frozen_f32(arr: np.ndarray, ndim: int, what: str) -> np.ndarray:
    a = np.asarray(arr)
    _require(a.dtype == np.float32, f"{what} must be float32, got {a.dtype}")
    _require(a.ndim == ndim, f"{what} must be {ndim}-dimensional")
    _require(bool(np.isfinite(a).all()), f"{what} contains NaN or Inf")
    a = np.ascontiguousarray(a).copy()
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ParameterSet:
    """Per-layer (weights, bias) float32 pairs, immutable after construction.

    Weights for a layer are shaped (output_dim, input_dim).  All values are
    checked finite on ingest.
    """

    layers: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        frozen = []
        for i, (w, b) in enumerate(self.layers):
            w = _frozen_f32(w, 2, f"layer {i} weights")
            b = _frozen_f32(b, 1, f"layer {i} bias")
            frozen.append((w, b))
        object.__setattr__(self, "layers", tuple(frozen))

    def __len__(self) -> int:
        return len(self.layers)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParameterSet):
            return NotImplemented
        return self.layer_bytes() == other.layer_bytes()

    def __hash__(self):
        return hash(self.layer_bytes())

    def layer_bytes(self) -> tuple[tuple[bytes, bytes], ...]:
        """Exact little-endian byte images of every layer, for bit-level compares."""
        return tuple((w.astype("<f4").tobytes(), b.astype("<f4").tobytes())
                     for w, b in self.layers)

    def slice(self, start: int, stop: int | None = None) -> "ParameterSet":
        return ParameterSet(self.layers[start:stop])


@dataclass(frozen=True)
class CompileInfo:
    """Training recipe shipped with a model."""

    optimizer: str = "sgd"
    learning_rate: float = 0.01
    loss: str = "cross_entropy"

    def __post_init__(self):
        _require(self.optimizer in OPTIMIZERS, f"unknown optimizer {self.optimizer!r}")
        _require(self.loss in LOSSES, f"unknown loss {self.loss!r}")
        lr = float(self.learning_rate)
        # learning_rate > 0 is required on ingest (see deserialize_model); the
        # in-process type also admits 0.0 so a no-op training pass is expressible.
        _require(math.isfinite(lr) and lr >= 0.0,
                 f"learning_rate must be finite and non-negative, got {self.learning_rate!r}")
        object.__setattr__(self, "learning_rate", lr)


# ---------------------------------------------------------------------------
# Operations


def init_parameters(arch: ModelArchitecture, seed: int) -> ParameterSet:
    """Glorot-uniform weights, zero biases, fully determined by ``seed``.

    Each weight is drawn uniformly from [-L, L] with
    L = sqrt(6 / (input_dim + output_dim)).  Draw order is layer by layer,
    weights row-major, from a single PCG64 stream seeded with ``seed``.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for spec in arch.layers:
        limit = math.sqrt(6.0 / (spec.input_dim + spec.output_dim))
        w = rng.uniform(-limit, limit, size=(spec.output_dim, spec.input_dim))
        layers.append((w.astype(np.float32), np.zeros(spec.output_dim, dtype=np.float32)))
    return ParameterSet(tuple(layers))


def shape_check(arch: ModelArchitecture, params: ParameterSet) -> bool:
    """True iff ``params`` has one (weights, bias) pair per layer with exact dims."""
    if len(params.layers) != len(arch.layers):
        return False
    for spec, (w, b) in zip(arch.layers, params.layers):
        if w.shape != (spec.output_dim, spec.input_dim):
            return False
        if b.shape != (spec.output_dim,):
            return False
    return True


def canonical_json(obj) -> bytes:
    """Sorted keys, no insignificant whitespace, UTF-8."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def arch_doc(arch: ModelArchitecture) -> dict:
    return {
        "input_dim": arch.input_dim,
        "layers": [{"in": s.input_dim, "out": s.output_dim, "activation": s.activation}
                   for s in arch.layers],
        "prediction_boundary": arch.prediction_boundary,
    }


def compile_doc(compile_info: CompileInfo) -> dict:
    return {
        "optimizer": compile_info.optimizer,
        "learning_rate": compile_info.learning_rate,
        "loss": compile_info.loss,
    }


def params_doc(params: ParameterSet) -> list[dict]:
    return [{"weights_b64": _b64(w.astype("<f4").tobytes()),
             "bias_b64": _b64(b.astype("<f4").tobytes())}
            for w, b in params.layers]


def serialize_model(arch: ModelArchitecture, params: ParameterSet,
                    compile_info: CompileInfo) -> bytes:
    """Canonical byte encoding of the (architecture, parameters, compile) triple."""
    if not shape_check(arch, params):
        raise ShapeMismatchError("parameters do not match architecture")
    doc = {
        "architecture": arch_doc(arch),
        "compile": compile_doc(compile_info),
        "parameters": params_doc(params),
    }
    return canonical_json(doc)


def _parse_expect(doc, keys: tuple[str, ...], what: str) -> None:
    if not isinstance(doc, dict) or set(doc.keys()) != set(keys):
        raise ParseError(f"{what} must be an object with keys {sorted(keys)}")


def _parse_int(value, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"{what} must be an integer")
    return value


def arch_from_doc(doc) -> ModelArchitecture:
    _parse_expect(doc, ("input_dim", "layers", "prediction_boundary"), "architecture")
    if not isinstance(doc["layers"], list) or not doc["layers"]:
        raise ParseError("architecture layers must be a non-empty array")
    layers = []
    for entry in doc["layers"]:
        _parse_expect(entry, ("in", "out", "activation"), "layer")
        if not isinstance(entry["activation"], str) or entry["activation"] not in ACTIVATIONS:
            raise ParseError(f"unknown activation {entry['activation']!r}")
        layers.append(LayerSpec(_parse_int(entry["in"], "layer in"),
                                _parse_int(entry["out"], "layer out"),
                                entry["activation"]))
    return ModelArchitecture(tuple(layers),
                             _parse_int(doc["input_dim"], "input_dim"),
                             _parse_int(doc["prediction_boundary"], "prediction_boundary"))


def compile_from_doc(doc) -> CompileInfo:
    _parse_expect(doc, ("optimizer", "learning_rate", "loss"), "compile")
    if not isinstance(doc["optimizer"], str) or doc["optimizer"] not in OPTIMIZERS:
        raise ParseError(f"unknown optimizer {doc['optimizer']!r}")
    if not isinstance(doc["loss"], str) or doc["loss"] not in LOSSES:
        raise ParseError(f"unknown loss {doc['loss']!r}")
    lr = doc["learning_rate"]
    if not isinstance(lr, (int, float)) or isinstance(lr, bool):
        raise ParseError("learning_rate must be a number")
    if not (math.isfinite(float(lr)) and float(lr) > 0.0):
        raise InvalidModelError(f"learning_rate must be positive, got {lr!r}")
    return CompileInfo(doc["optimizer"], float(lr), doc["loss"])


def _floats_from_b64(text, count: int, what: str,
                     shape_exc: type[Exception] = InvalidModelError) -> np.ndarray:
    if not isinstance(text, str):
        raise ParseError(f"{what} must be a base64 string")
    try:
        raw = base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ParseError(f"{what} is not valid base64: {exc}") from exc
    if len(raw) != 4 * count:
        raise shape_exc(f"{what} holds {len(raw)} bytes, expected {4 * count}")
    arr = np.frombuffer(raw, dtype="<f4").astype(np.float32)
    if not np.isfinite(arr).all():
        raise InvalidModelError(f"{what} contains NaN or Inf")
    return arr


def params_from_doc(doc, arch: ModelArchitecture,
                    shape_exc: type[Exception] = InvalidModelError) -> ParameterSet:
    """Decode per-layer base64 blobs against ``arch``'s shapes.

    A dimension disagreement raises ``shape_exc``: inside one encoded model
    it is an invalid encoding, but when decoding a pushed contribution
    against a model's architecture the caller wants a shape mismatch.
    """
    if not isinstance(doc, list):
        raise ParseError("parameters must be an array of layer objects")
    if len(doc) != len(arch.layers):
        raise shape_exc(f"parameters hold {len(doc)} layers, architecture has {len(arch.layers)}")
    layers = []
    for i, (entry, spec) in enumerate(zip(doc, arch.layers)):
        _parse_expect(entry, ("weights_b64", "bias_b64"), "parameter layer")
        w = _floats_from_b64(entry["weights_b64"], spec.input_dim * spec.output_dim,
                             f"layer {i} weights", shape_exc)
        b = _floats_from_b64(entry["bias_b64"], spec.output_dim, f"layer {i} bias", shape_exc)
        layers.append((w.reshape(spec.output_dim, spec.input_dim), b))
    return ParameterSet(tuple(layers))


def deserialize_model(data: bytes) -> tuple[ModelArchitecture, ParameterSet, CompileInfo]:
    """Inverse of :func:`serialize_model`; validates every type invariant.

    Raises :class:`ParseError` for malformed encodings and
    :class:`InvalidModelError` for well-formed ones that violate invariants
    (NaN weights, broken layer chain, non-positive learning rate, ...).
    """
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"not a UTF-8 JSON document: {exc}") from exc
    _parse_expect(doc, ("architecture", "compile", "parameters"), "model")
    arch = arch_from_doc(doc["architecture"])
    compile_info = compile_from_doc(doc["compile"])
    params = params_from_doc(doc["parameters"], arch)
    return arch, params, compile_info


# ---------------------------------------------------------------------------
# Content addressing (used by the registry)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def arch_blob(arch: ModelArchitecture) -> bytes:
    return canonical_json(arch_doc(arch))


def arch_from_blob(data: bytes) -> ModelArchitecture:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad architecture blob: {exc}") from exc
    return arch_from_doc(doc)


def params_blob(params: ParameterSet) -> bytes:
    return canonical_json(params_doc(params))


def params_from_blob(data: bytes, arch: ModelArchitecture) -> ParameterSet:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad parameter blob: {exc}") from exc
    return params_from_doc(doc, arch)
