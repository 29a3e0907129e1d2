from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fedhub.core import CompileInfo, LayerSpec, ModelArchitecture, ParameterSet


def make_arch(dims: list[int], boundary: int | None = None,
              final: str = "softmax") -> ModelArchitecture:
    layers = [LayerSpec(dims[i], dims[i + 1], "relu") for i in range(len(dims) - 2)]
    layers.append(LayerSpec(dims[-2], dims[-1], final))
    if boundary is None:
        boundary = len(layers) - 1
    return ModelArchitecture(tuple(layers), dims[0], boundary)


def random_arch(rng: np.random.Generator, max_layers: int = 4,
                max_dim: int = 8) -> ModelArchitecture:
    depth = int(rng.integers(1, max_layers + 1))
    dims = [int(rng.integers(1, max_dim + 1)) for _ in range(depth + 1)]
    boundary = int(rng.integers(0, depth))
    return make_arch(dims, boundary)


def random_params(rng: np.random.Generator, arch: ModelArchitecture,
                  scale: float = 1.0) -> ParameterSet:
    layers = []
    for spec in arch.layers:
        w = rng.normal(0, scale, size=(spec.output_dim, spec.input_dim)).astype(np.float32)
        b = rng.normal(0, scale, size=spec.output_dim).astype(np.float32)
        layers.append((w, b))
    return ParameterSet(tuple(layers))


def random_compile(rng: np.random.Generator) -> CompileInfo:
    return CompileInfo("sgd", float(rng.uniform(1e-4, 1.0)), "cross_entropy")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240801)
