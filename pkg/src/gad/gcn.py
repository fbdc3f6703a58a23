"""Dense multi-layer GCN with an analytic backward pass, in float64.

Layer l computes H = relu(A_hat @ (H_prev @ W_l)); the final layer swaps
relu for a row softmax.  The loss is masked categorical cross-entropy over
the selected nodes (summed by default, mean optional) and gradients come
from exact reverse-mode differentiation of that chain, so they can be
checked against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import rngs
from .errors import GadError, NumericalError
from .graph import NormalizedAdjacency

PROB_FLOOR = 1e-12   # clip for log(y_hat)


@dataclass(frozen=True, eq=False)
class GcnParams:
    """Per-layer weight matrices; dims chain feature_dim -> hidden... -> classes."""

    weights: tuple[np.ndarray, ...]
    seed: int = 0
    scheme: str = "glorot_uniform"

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def __post_init__(self):
        for a, b in zip(self.weights, self.weights[1:]):
            if a.shape[1] != b.shape[0]:
                raise GadError("adjacent layer dimensions do not chain")
        for w in self.weights:
            if not np.isfinite(w).all():
                raise GadError("non-finite parameter values")


@dataclass(frozen=True, eq=False)
class ForwardCache:
    """Intermediate activations of one forward pass."""

    activations: tuple[np.ndarray, ...]      # H_0 .. H_{L-1} (inputs to each layer)
    pre_activations: tuple[np.ndarray, ...]  # A_hat (H W) per layer
    probs: np.ndarray                        # softmax output, rows sum to 1


@dataclass(frozen=True, eq=False)
class Gradients:
    """Loss value and d(loss)/dW per layer, shaped like the parameters."""

    grads: tuple[np.ndarray, ...]
    loss: float

    def scaled(self, c: float) -> "Gradients":
        return Gradients(grads=tuple(c * g for g in self.grads), loss=c * self.loss)


def init_params(
    dims: tuple[int, ...], seed: int = 0, scheme: str = "glorot_uniform"
) -> GcnParams:
    """Glorot-uniform initialization for the given dimension chain."""
    if scheme != "glorot_uniform":
        raise GadError(f"unknown init scheme {scheme!r}")
    rng = rngs.stream(seed, rngs.INIT)
    weights = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
    return GcnParams(weights=tuple(weights), seed=seed, scheme=scheme)


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: GcnParams, adj: NormalizedAdjacency, features: np.ndarray) -> ForwardCache:
    """Propagate features through every layer; softmax on the last."""
    a = adj.matrix
    if features.shape[0] != a.shape[0]:
        raise GadError("feature rows must match adjacency dimension")
    h = np.asarray(features, dtype=np.float64)
    activations = []
    pres = []
    for l, w in enumerate(params.weights):
        if h.shape[1] != w.shape[0]:
            raise GadError(f"layer {l}: input dim {h.shape[1]} != weight rows {w.shape[0]}")
        activations.append(h)
        z = a @ (h @ w)
        pres.append(z)
        h = _softmax_rows(z) if l == params.num_layers - 1 else np.maximum(z, 0.0)
    return ForwardCache(
        activations=tuple(activations), pre_activations=tuple(pres), probs=h
    )


def loss_and_backward(
    cache: ForwardCache,
    params: GcnParams,
    adj: NormalizedAdjacency,
    features: np.ndarray,
    labels: np.ndarray,
    loss_mask: np.ndarray,
    reduction: str = "sum",
) -> Gradients:
    """Masked categorical cross-entropy and exact gradients for every layer.

    ``reduction`` picks between the summed loss over masked nodes and its
    mean.  Only masked rows contribute; replicas or unlabeled nodes are
    simply left out of the mask by the caller.
    """
    if reduction not in ("sum", "mean"):
        raise GadError(f"unknown loss reduction {reduction!r}")
    mask = np.asarray(loss_mask, dtype=bool)
    if not mask.any():
        raise GadError("loss mask selects no nodes")
    y = np.asarray(labels, dtype=np.int64)
    probs = cache.probs
    n_classes = probs.shape[1]
    sel = np.flatnonzero(mask)
    if y[sel].min() < 0 or y[sel].max() >= n_classes:
        raise GadError("label out of range under loss mask")

    picked = np.clip(probs[sel, y[sel]], PROB_FLOOR, 1.0)
    loss = float(-np.log(picked).sum())
    scale = 1.0
    if reduction == "mean":
        scale = 1.0 / len(sel)
        loss *= scale

    # gradient at the softmax input: (probs - onehot) on masked rows
    gz = np.zeros_like(probs)
    gz[sel] = probs[sel] * scale
    gz[sel, y[sel]] -= scale

    a = adj.matrix
    grads: list[np.ndarray] = [None] * params.num_layers
    for l in range(params.num_layers - 1, -1, -1):
        gm = a @ gz                       # d(loss)/d(H_in @ W); A_hat is symmetric
        h_in = cache.activations[l]
        grads[l] = h_in.T @ gm
        if l > 0:
            gh = gm @ params.weights[l].T
            gz = gh * (cache.pre_activations[l - 1] > 0.0)
    if not np.isfinite(loss):
        raise NumericalError("non-finite loss")
    return Gradients(grads=tuple(grads), loss=loss)


def sgd_update(params: GcnParams, grads: Gradients, eta: float) -> GcnParams:
    """Plain gradient step W <- W - eta * dW; inputs are left untouched."""
    if eta <= 0:
        raise GadError("learning rate must be positive")
    new_w = tuple(w - eta * g for w, g in zip(params.weights, grads.grads))
    return GcnParams(weights=new_w, seed=params.seed, scheme=params.scheme)


def save_params(params: GcnParams, path) -> None:
    """Checkpoint: one JSON header line, then the raw float64 weight bytes."""
    header = {
        "dims": list(params.dims),
        "seed": params.seed,
        "scheme": params.scheme,
        "dtype": "<f8",
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for w in params.weights:
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())


def load_params(path) -> GcnParams:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        dims = header["dims"]
        weights = []
        for fan_in, fan_out in zip(dims, dims[1:]):
            buf = fh.read(fan_in * fan_out * 8)
            weights.append(
                np.frombuffer(buf, dtype="<f8").reshape(fan_in, fan_out).copy()
            )
    return GcnParams(
        weights=tuple(weights), seed=int(header["seed"]), scheme=header["scheme"]
    )
