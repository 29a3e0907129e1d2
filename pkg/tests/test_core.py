from __future__ import annotations

import base64
import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedhub.core import (
    CompileInfo,
    LayerSpec,
    ModelArchitecture,
    ParameterSet,
    deserialize_model,
    init_parameters,
    params_blob,
    serialize_model,
    shape_check,
)
from fedhub.errors import InvalidModelError, ParseError, ShapeMismatchError

from conftest import make_arch, random_arch, random_compile, random_params


# -- type invariants ---------------------------------------------------------

def test_layer_rejects_nonpositive_dims():
    with pytest.raises(InvalidModelError):
        LayerSpec(0, 3, "relu")
    with pytest.raises(InvalidModelError):
        LayerSpec(2, -1, "relu")
    with pytest.raises(InvalidModelError):
        LayerSpec(2, 3, "tanh")


def test_arch_rejects_broken_chain_and_misplaced_softmax():
    with pytest.raises(InvalidModelError):
        ModelArchitecture((LayerSpec(2, 3, "relu"), LayerSpec(4, 2, "softmax")), 2, 0)
    with pytest.raises(InvalidModelError):
        ModelArchitecture((LayerSpec(2, 3, "softmax"), LayerSpec(3, 2, "softmax")), 2, 0)
    with pytest.raises(InvalidModelError):
        ModelArchitecture((LayerSpec(2, 3, "relu"),), 4, 0)
    with pytest.raises(InvalidModelError):
        ModelArchitecture((LayerSpec(2, 3, "relu"),), 2, 1)


def test_parameter_set_rejects_nonfinite():
    w = np.array([[np.nan, 0.0]], dtype=np.float32)
    with pytest.raises(InvalidModelError):
        ParameterSet(((w, np.zeros(1, dtype=np.float32)),))


def test_parameter_set_is_immutable():
    params = init_parameters(make_arch([2, 3]), 7)
    with pytest.raises(ValueError):
        params.layers[0][0][0, 0] = 1.0


def test_compile_info_validation():
    with pytest.raises(InvalidModelError):
        CompileInfo("adam", 0.1, "cross_entropy")
    with pytest.raises(InvalidModelError):
        CompileInfo("sgd", -0.1, "cross_entropy")
    with pytest.raises(InvalidModelError):
        CompileInfo("sgd", float("inf"), "cross_entropy")
    # zero is representable in-process (a no-op training pass)
    assert CompileInfo("sgd", 0.0, "cross_entropy").learning_rate == 0.0


# -- init_parameters ----------------------------------------------------------

def test_init_respects_glorot_bound_and_zero_bias():
    arch = make_arch([2, 3])
    limit = math.sqrt(6.0 / 5.0)
    for seed in (0, 1, 12345):
        params = init_parameters(arch, seed)
        w, b = params.layers[0]
        assert w.shape == (3, 2) and b.shape == (3,)
        assert np.all(np.abs(w) <= limit)
        assert b.tobytes() == b"\x00" * 12


def test_init_is_deterministic():
    arch = make_arch([2, 3])
    assert init_parameters(arch, 99) == init_parameters(arch, 99)


def test_init_differs_across_seeds():
    arch = make_arch([2, 3])
    a, b = init_parameters(arch, 1), init_parameters(arch, 2)
    assert a != b


def test_init_always_shape_checks(rng):
    for _ in range(20):
        arch = random_arch(rng)
        seed = int(rng.integers(0, 2**63))
        assert shape_check(arch, init_parameters(arch, seed))


# -- shape_check ---------------------------------------------------------------

def test_shape_check_cases():
    arch = make_arch([2, 3])
    good = ParameterSet(((np.zeros((3, 2), np.float32), np.zeros(3, np.float32)),))
    transposed = ParameterSet(((np.zeros((2, 3), np.float32), np.zeros(3, np.float32)),))
    assert shape_check(arch, good)
    assert not shape_check(arch, transposed)

    two_layer = make_arch([2, 3, 2])
    assert not shape_check(two_layer, good)


# -- serialization ---------------------------------------------------------------

def test_serialize_round_trip_and_canonical_form():
    arch = make_arch([2, 3, 2], boundary=1)
    params = init_parameters(arch, 5)
    compile_info = CompileInfo("sgd", 0.05, "cross_entropy")
    blob = serialize_model(arch, params, compile_info)

    arch2, params2, compile2 = deserialize_model(blob)
    assert arch2 == arch and params2 == params and compile2 == compile_info
    assert serialize_model(arch2, params2, compile2) == blob

    text = blob.decode("utf-8")
    assert " " not in text and "\n" not in text
    doc = json.loads(text)
    assert list(doc) == sorted(doc)


def test_one_point_zero_encodes_as_ieee754_le():
    arch = make_arch([2, 1])
    params = ParameterSet(((np.ones((1, 2), np.float32), np.zeros(1, np.float32)),))
    blob = serialize_model(arch, params, CompileInfo())
    doc = json.loads(blob)
    raw = base64.b64decode(doc["parameters"][0]["weights_b64"])
    assert raw[:4] == bytes.fromhex("0000803f")


def test_single_float_difference_changes_encoding(rng):
    arch = make_arch([3, 4, 2])
    params = random_params(rng, arch)
    layers = [(w.copy(), b.copy()) for w, b in params.layers]
    layers[1][0][0, 0] += np.float32(1e-3)
    bumped = ParameterSet(tuple(layers))
    compile_info = CompileInfo()
    assert serialize_model(arch, params, compile_info) != serialize_model(arch, bumped, compile_info)


def test_serialize_rejects_shape_mismatch():
    arch = make_arch([2, 3])
    wrong = ParameterSet(((np.zeros((2, 2), np.float32), np.zeros(2, np.float32)),))
    with pytest.raises(ShapeMismatchError):
        serialize_model(arch, wrong, CompileInfo())


def test_deserialize_rejects_truncation():
    blob = serialize_model(make_arch([2, 3]), init_parameters(make_arch([2, 3]), 1), CompileInfo())
    with pytest.raises(ParseError):
        deserialize_model(blob[: len(blob) // 2])
    with pytest.raises(ParseError):
        deserialize_model(b"not json at all")


def test_deserialize_rejects_patched_nan():
    arch = make_arch([2, 3])
    blob = serialize_model(arch, init_parameters(arch, 1), CompileInfo())
    doc = json.loads(blob)
    raw = bytearray(base64.b64decode(doc["parameters"][0]["weights_b64"]))
    raw[:4] = struct.pack("<f", float("nan"))
    doc["parameters"][0]["weights_b64"] = base64.b64encode(bytes(raw)).decode()
    patched = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    with pytest.raises(InvalidModelError):
        deserialize_model(patched)


def _patched(blob: bytes, mutate) -> bytes:
    doc = json.loads(blob)
    mutate(doc)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def test_deserialize_error_taxonomy():
    arch = make_arch([2, 3])
    blob = serialize_model(arch, init_parameters(arch, 1), CompileInfo())

    with pytest.raises(ParseError):  # unexpected key
        deserialize_model(_patched(blob, lambda d: d.update(extra=1)))
    with pytest.raises(ParseError):  # unknown activation
        deserialize_model(_patched(blob, lambda d: d["architecture"]["layers"][0].update(activation="tanh")))
    with pytest.raises(ParseError):  # bad base64
        deserialize_model(_patched(blob, lambda d: d["parameters"][0].update(weights_b64="!!!")))
    with pytest.raises(InvalidModelError):  # non-positive learning rate on ingest
        deserialize_model(_patched(blob, lambda d: d["compile"].update(learning_rate=0)))
    with pytest.raises(InvalidModelError):  # blob length disagrees with shape
        deserialize_model(_patched(
            blob, lambda d: d["parameters"][0].update(bias_b64=base64.b64encode(b"\0" * 8).decode())))
    with pytest.raises(InvalidModelError):  # boundary out of range
        deserialize_model(_patched(blob, lambda d: d["architecture"].update(prediction_boundary=5)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 2**63 - 1))
def test_round_trip_property(structure_seed, init_seed):
    rng = np.random.default_rng(structure_seed)
    arch = random_arch(rng)
    params = random_params(rng, arch)
    compile_info = random_compile(rng)
    blob = serialize_model(arch, params, compile_info)
    arch2, params2, compile2 = deserialize_model(blob)
    assert (arch2, compile2) == (arch, compile_info)
    assert params2.layer_bytes() == params.layer_bytes()
    assert serialize_model(arch2, params2, compile2) == blob


def test_params_blob_shares_bytes_with_model_encoding(rng):
    arch = random_arch(rng)
    params = random_params(rng, arch)
    doc = json.loads(serialize_model(arch, params, CompileInfo()))
    assert json.loads(params_blob(params)) == doc["parameters"]
