"""Aggregation policies over contributed parameter sets.

All aggregation accumulates in float64 and rounds to float32 exactly once at
the end.  Inputs are re-ordered internally into a canonical content-derived
order before accumulation, so the output is byte-identical under any
permutation of the input list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParameterSet, sha256_hex
from .errors import EmptyAggregationError, InvalidArgumentsError, ShapeMismatchError

LATEST_ONLY = "latest_only"
REBRANCH_OLD = "rebranch_old"


@dataclass(frozen=True)
class WeightedParams:
    """One contribution to an aggregate: parameters plus its sample count."""

    params: ParameterSet
    weight: int

    def __post_init__(self):
        if not isinstance(self.weight, int) or isinstance(self.weight, bool) or self.weight < 1:
            raise ShapeMismatchError(f"weight must be a positive integer, got {self.weight!r}")


@dataclass(frozen=True)
class StalenessPolicy:
    """How the manager treats contributions whose base is not the head."""

    mode: str = LATEST_ONLY

    def __post_init__(self):
        if self.mode not in (LATEST_ONLY, REBRANCH_OLD):
            raise InvalidArgumentsError(f"unknown staleness mode {self.mode!r}")


def _shapes(params: ParameterSet) -> tuple:
    return tuple((w.shape, b.shape) for w, b in params.layers)


def _content_key(item: WeightedParams) -> tuple:
    digest = sha256_hex(b"".join(w + b for w, b in item.params.layer_bytes()))
    return (item.weight, digest)


def fedavg(inputs: list[WeightedParams]) -> ParameterSet:
    """Sample-count-weighted mean of shape-identical parameter sets.

    Every output scalar is sum_k (n_k / N) * x_k with N = sum of weights,
    accumulated in float64 in canonical order and rounded to float32 once.
    """
    if not inputs:
        raise EmptyAggregationError("fedavg of zero inputs")
    reference = _shapes(inputs[0].params)
    for item in inputs[1:]:
        if _shapes(item.params) != reference:
            raise ShapeMismatchError("aggregation inputs disagree on parameter shapes")

    ordered = sorted(inputs, key=_content_key)
    total = sum(item.weight for item in ordered)
    coefs = [item.weight / total for item in ordered]

    out_layers = []
    for li in range(len(reference)):
        w_acc = np.zeros(reference[li][0], dtype=np.float64)
        b_acc = np.zeros(reference[li][1], dtype=np.float64)
        for coef, item in zip(coefs, ordered):
            w, b = item.params.layers[li]
            w_acc += coef * w.astype(np.float64)
            b_acc += coef * b.astype(np.float64)
        out_layers.append((w_acc.astype(np.float32), b_acc.astype(np.float32)))
    return ParameterSet(tuple(out_layers))


def fmtl_merge(
    shared_inputs: list[WeightedParams],
    per_task_heads: dict[str, list[WeightedParams]],
    boundary: int,
) -> tuple[ParameterSet, dict[str, ParameterSet]]:
    """Multi-task merge: one shared feature prefix, one head per task.

    ``shared_inputs`` and the per-task lists hold full parameter sets; layers
    below ``boundary`` feed the shared average, layers at and above it feed
    the owning task's head average.  Tasks may disagree on head shapes; they
    must agree on feature-layer shapes.
    """
    if not shared_inputs:
        raise EmptyAggregationError("fmtl_merge needs at least one shared input")
    for item in shared_inputs:
        if len(item.params) < boundary:
            raise ShapeMismatchError("shared input has fewer layers than the boundary")

    shared_sliced = [WeightedParams(item.params.slice(0, boundary), item.weight)
                     for item in shared_inputs]
    shared = (fedavg(shared_sliced) if boundary > 0 else ParameterSet(()))

    heads: dict[str, ParameterSet] = {}
    for task, items in per_task_heads.items():
        if not items:
            raise EmptyAggregationError(f"task {task!r} has no head contributions")
        for item in items:
            if len(item.params) <= boundary:
                raise ShapeMismatchError(f"task {task!r} input has no layers past the boundary")
        heads[task] = fedavg([WeightedParams(item.params.slice(boundary), item.weight)
                              for item in items])
    return shared, heads


def filter_stale(contributions: list, head, policy: StalenessPolicy | None = None):
    """Split contributions into (fresh, stale) by strict base-version equality.

    The policy does not change the partition; it tells the caller what to do
    with the stale side (mark ignored under ``latest_only``, or re-branch from
    the stale base under ``rebranch_old``).
    """
    fresh = [c for c in contributions if c.base_version == head]
    stale = [c for c in contributions if c.base_version != head]
    return fresh, stale
