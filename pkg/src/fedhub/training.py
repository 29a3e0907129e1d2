"""From-scratch dense-network training and synthetic classification tasks.

The trainer implements forward, cross-entropy backprop, and mini-batch SGD
over the float32 parameter sets the hub stores.  Every function is a pure
function of its explicit arguments (including seeds), so clients and the
simulation harness reproduce results bit-for-bit.

Synthetic tasks are Gaussian mixtures in a latent space: each class owns
``modes_per_class`` latent centers, and samples are mapped into input space
through a random linear basis drawn from ``shared_basis_seed`` alone.  Two
tasks sharing that seed therefore share feature structure (the same signal
subspace buried in full-dimensional noise), which is what makes
feature-layer transfer between them meaningful.  The latent space is kept
well below typical input widths so that a task with few clusters occupies
only a slice of it, while many clusters force features that span all of it;
``modes_per_class`` thereby controls how much transferable structure a task
teaches.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .core import CompileInfo, ModelArchitecture, ParameterSet, shape_check
from .errors import InvalidArgumentsError, ShapeMismatchError

LATENT_DIM = 12
_CENTER_SCALE = 1.0
_LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray   # (num_samples, input_dim) float32
    labels: np.ndarray   # (num_samples,) int64 class indices
    num_classes: int

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float32)
        labels = np.asarray(self.labels, dtype=np.int64)
        if inputs.ndim != 2 or labels.ndim != 1 or inputs.shape[0] != labels.shape[0]:
            raise InvalidArgumentsError("inputs and labels disagree on sample count")
        if inputs.shape[0] < 1:
            raise InvalidArgumentsError("dataset needs at least one sample")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise InvalidArgumentsError("labels out of range")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class TaskSpec:
    """Identity and difficulty of one synthetic classification task.

    ``modes_per_class`` is the complexity knob: more latent clusters per
    class force a richer feature representation.
    """

    task_id: str
    input_dim: int
    num_classes: int
    modes_per_class: int
    shared_basis_seed: int
    noise_sigma: float

    def __post_init__(self):
        if self.modes_per_class < 1:
            raise InvalidArgumentsError("modes_per_class must be >= 1")
        if self.input_dim < 1 or self.num_classes < 1:
            raise InvalidArgumentsError("input_dim and num_classes must be >= 1")
        if self.noise_sigma < 0:
            raise InvalidArgumentsError("noise_sigma must be >= 0")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary labelled parts (sha256-based)."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def task_basis(spec: TaskSpec) -> np.ndarray:
    """Latent-to-input projection; depends only on the shared basis seed."""
    rng = np.random.default_rng(spec.shared_basis_seed)
    basis = rng.normal(0.0, 1.0 / np.sqrt(LATENT_DIM), size=(LATENT_DIM, spec.input_dim))
    return basis.astype(np.float32)


def task_centers(spec: TaskSpec) -> np.ndarray:
    """Latent cluster centers, one per (class, mode); fixed by task identity."""
    seed = derive_seed("centers", spec.task_id, spec.shared_basis_seed,
                       spec.num_classes, spec.modes_per_class)
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, _CENTER_SCALE,
                         size=(spec.num_classes, spec.modes_per_class, LATENT_DIM))
    return centers.astype(np.float64)


def generate_task(spec: TaskSpec, n: int, seed: int) -> Dataset:
    """Draw ``n`` labelled samples from the task's Gaussian mixture."""
    if n < 1:
        raise InvalidArgumentsError("sample count must be >= 1")
    basis = task_basis(spec).astype(np.float64)
    centers = task_centers(spec)
    rng = np.random.default_rng(derive_seed("samples", spec.task_id, seed))
    labels = rng.integers(0, spec.num_classes, size=n)
    modes = rng.integers(0, spec.modes_per_class, size=n)
    latent = centers[labels, modes]
    inputs = latent @ basis
    if spec.noise_sigma > 0:
        inputs = inputs + spec.noise_sigma * rng.standard_normal((n, spec.input_dim))
    return Dataset(inputs.astype(np.float32), labels.astype(np.int64), spec.num_classes)


# ---------------------------------------------------------------------------
# Network math


def _check_inputs(arch: ModelArchitecture, params: ParameterSet, inputs: np.ndarray) -> None:
    if not shape_check(arch, params):
        raise ShapeMismatchError("parameters do not match architecture")
    if inputs.ndim != 2 or inputs.shape[1] != arch.input_dim:
        raise ShapeMismatchError(
            f"inputs have width {inputs.shape[-1] if inputs.ndim else '?'}, "
            f"architecture expects {arch.input_dim}")


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _apply(activation: str, z: np.ndarray) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0)
    if activation == "softmax":
        return _softmax(z)
    return z


def forward(arch: ModelArchitecture, params: ParameterSet, inputs: np.ndarray,
            dtype=np.float32) -> tuple[list[np.ndarray], np.ndarray]:
    """Per-layer activations and the final output of the network."""
    inputs = np.asarray(inputs)
    _check_inputs(arch, params, inputs)
    a = inputs.astype(dtype)
    activations = []
    for spec, (w, b) in zip(arch.layers, params.layers):
        z = a @ w.astype(dtype).T + b.astype(dtype)
        a = _apply(spec.activation, z)
        activations.append(a)
    return activations, activations[-1]


def backward(arch: ModelArchitecture, params: ParameterSet, inputs: np.ndarray,
             labels: np.ndarray, dtype=np.float32
             ) -> tuple[list[tuple[np.ndarray, np.ndarray]], float]:
    """Gradients of mean cross-entropy over the batch, and the loss itself.

    The final layer must be softmax; gradients come back as one (dW, db)
    pair per layer in ``dtype``.
    """
    inputs = np.asarray(inputs)
    labels = np.asarray(labels)
    _check_inputs(arch, params, inputs)
    if arch.layers[-1].activation != "softmax":
        raise ShapeMismatchError("cross-entropy training requires a softmax final layer")
    if labels.ndim != 1 or labels.shape[0] != inputs.shape[0]:
        raise ShapeMismatchError("labels do not match the batch")

    n = inputs.shape[0]
    a = inputs.astype(dtype)
    pre: list[np.ndarray] = []
    post: list[np.ndarray] = [a]
    for spec, (w, b) in zip(arch.layers, params.layers):
        z = a @ w.astype(dtype).T + b.astype(dtype)
        pre.append(z)
        a = _apply(spec.activation, z)
        post.append(a)

    probs = post[-1]
    picked = probs[np.arange(n), labels]
    loss = float(-np.log(np.maximum(picked, _LOG_FLOOR)).mean())

    onehot = np.zeros_like(probs)
    onehot[np.arange(n), labels] = 1
    delta = (probs - onehot) / dtype(n)  # d(mean CE)/d(final pre-activation)

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(arch.layers)  # type: ignore[list-item]
    for li in range(len(arch.layers) - 1, -1, -1):
        w = params.layers[li][0].astype(dtype)
        grads[li] = (delta.T @ post[li], delta.sum(axis=0))
        if li > 0:
            upstream = delta @ w
            activation = arch.layers[li - 1].activation
            if activation == "relu":
                upstream = upstream * (pre[li - 1] > 0)
            elif activation == "softmax":
                raise ShapeMismatchError("softmax is only permitted on the final layer")
            delta = upstream
    return grads, loss


def train_local(arch: ModelArchitecture, params: ParameterSet, dataset: Dataset,
                compile_info: CompileInfo, epochs: int, batch_size: int,
                seed: int) -> tuple[ParameterSet, dict]:
    """Mini-batch SGD for ``epochs`` passes; shuffle order is seeded.

    Returns the trained parameters and the final train metrics on the whole
    dataset.  Deterministic given all arguments; a zero learning rate leaves
    the parameters bit-identical.
    """
    if epochs < 1 or batch_size < 1:
        raise InvalidArgumentsError("epochs and batch_size must be >= 1")
    _check_inputs(arch, params, dataset.inputs)
    lr = np.float32(compile_info.learning_rate)
    weights = [(w.copy(), b.copy()) for w, b in params.layers]
    rng = np.random.default_rng(seed)
    n = len(dataset)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            if lr == 0:
                continue
            current = ParameterSet(tuple((w, b) for w, b in weights))
            grads, _ = backward(arch, current, dataset.inputs[batch],
                                dataset.labels[batch], dtype=np.float32)
            weights = [(w - lr * dw, b - lr * db)
                       for (w, b), (dw, db) in zip(weights, grads)]
    trained = ParameterSet(tuple(weights))
    scores = evaluate(arch, trained, dataset)
    return trained, {"train_accuracy": scores["accuracy"], "train_loss": scores["loss"]}


def evaluate(arch: ModelArchitecture, params: ParameterSet, dataset: Dataset) -> dict:
    """Accuracy (argmax, ties to the lowest class index) and mean cross-entropy."""
    _check_inputs(arch, params, dataset.inputs)
    _, probs = forward(arch, params, dataset.inputs, dtype=np.float32)
    predicted = probs.argmax(axis=1)
    accuracy = float((predicted == dataset.labels).mean())
    picked = probs[np.arange(len(dataset)), dataset.labels]
    loss = float(-np.log(np.maximum(picked.astype(np.float64), _LOG_FLOOR)).mean())
    return {"accuracy": accuracy, "loss": loss}
