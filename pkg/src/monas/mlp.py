"""A small dense-network engine in numpy.

Forward pass, backpropagation and Adam, plus the three model transformations
used by the grow-then-shrink search: identity layer insertion (function
preserving), structured unit pruning, and label-free distillation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ACTIVATIONS = ("relu", "identity")


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class Layer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "relu"

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


class DenseNet:
    def __init__(self, layers: Sequence[Layer]):
        layers = list(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.n_out != b.n_in:
                raise ValueError(f"layer dims do not chain: {a.n_out} -> {b.n_in}")
        for layer in layers:
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"unknown activation {layer.activation!r}")
        self.layers = layers

    @classmethod
    def build(cls, sizes: Sequence[int], rng: np.random.Generator) -> "DenseNet":
        """He-initialized ReLU network; the last layer is linear (logits)."""
        layers = []
        for i, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
            W = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in))
            act = "identity" if i == len(sizes) - 2 else "relu"
            layers.append(Layer(W, np.zeros(n_out), act))
        return cls(layers)

    @property
    def sizes(self) -> list[int]:
        return [self.layers[0].n_in] + [layer.n_out for layer in self.layers]

    @property
    def n_params(self) -> int:
        return sum(layer.W.size + layer.b.size for layer in self.layers)

    def copy(self) -> "DenseNet":
        return DenseNet([Layer(l.W.copy(), l.b.copy(), l.activation) for l in self.layers])

    def forward(self, X: np.ndarray) -> np.ndarray:
        h = X
        for layer in self.layers:
            h = h @ layer.W.T + layer.b
            if layer.activation == "relu":
                h = np.maximum(h, 0.0)
        return h

    def _forward_cached(self, X: np.ndarray):
        inputs, pre = [], []
        h = X
        for layer in self.layers:
            inputs.append(h)
            z = h @ layer.W.T + layer.b
            pre.append(z)
            h = np.maximum(z, 0.0) if layer.activation == "relu" else z
        return h, inputs, pre

    def _backward(self, inputs, pre, grad_out):
        grads = [None] * len(self.layers)
        g = grad_out
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            if layer.activation == "relu":
                g = g * (pre[i] > 0)
            grads[i] = (g.T @ inputs[i], g.sum(axis=0))
            if i:
                g = g @ layer.W
        return grads

    def to_dict(self) -> dict:
        return {"layers": [
            {"in": l.n_in, "out": l.n_out, "activation": l.activation,
             "weights": l.W.ravel().tolist(), "bias": l.b.tolist()}
            for l in self.layers]}

    @classmethod
    def from_dict(cls, d: dict) -> "DenseNet":
        return cls([Layer(np.array(l["weights"], dtype=float).reshape(l["out"], l["in"]),
                          np.array(l["bias"], dtype=float), l["activation"]) for l in d["layers"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DenseNet":
        return cls.from_dict(json.loads(text))


def mlp_param_count(sizes: Sequence[int]) -> int:
    return sum(a * b + b for a, b in zip(sizes, sizes[1:]))


@dataclass(frozen=True)
class TrainSpec:
    lr: float
    batch_size: int
    epochs: int
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.lr < 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError(f"invalid training spec {self}")


class Adam:
    def __init__(self, net: DenseNet, spec: TrainSpec):
        self.spec = spec
        self.t = 0
        self.m = [(np.zeros_like(l.W), np.zeros_like(l.b)) for l in net.layers]
        self.v = [(np.zeros_like(l.W), np.zeros_like(l.b)) for l in net.layers]

    def step(self, net: DenseNet, grads) -> None:
        s = self.spec
        self.t += 1
        c1 = 1 - s.beta1 ** self.t
        c2 = 1 - s.beta2 ** self.t
        for layer, (gW, gb), m, v in zip(net.layers, grads, self.m, self.v):
            for param, g, mi, vi in ((layer.W, gW, m[0], v[0]), (layer.b, gb, m[1], v[1])):
                mi *= s.beta1
                mi += (1 - s.beta1) * g
                vi *= s.beta2
                vi += (1 - s.beta2) * g * g
                param -= s.lr * (mi / c1) / (np.sqrt(vi / c2) + s.eps)


# -- losses -------------------------------------------------------------------

def softmax(z: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    z = z / temperature
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _xent(out, y):
    p = softmax(out)
    n = len(y)
    loss = -np.mean(np.log(p[np.arange(n), y] + 1e-300))
    g = p
    g[np.arange(n), y] -= 1.0
    return loss, g / n


def _mse(out, y):
    diff = out - y
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


def _kl(out, target_probs, temperature):
    p_s = softmax(out, temperature)
    loss = np.mean(np.sum(target_probs * (np.log(target_probs + 1e-300) - np.log(p_s + 1e-300)), axis=1))
    return loss, (p_s - target_probs) / (temperature * len(out))


_LOSSES = {"xent": _xent, "mse": _mse}


def loss_and_grads(net: DenseNet, X: np.ndarray, y: np.ndarray, loss: str = "xent"):
    out, inputs, pre = net._forward_cached(X)
    value, g = _LOSSES[loss](out, y)
    return value, net._backward(inputs, pre, g)


def classification_error(net: DenseNet, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.argmax(net.forward(X), axis=1) != y))


def _fit(net, X, target, spec, rng, loss_fn):
    opt = Adam(net, spec)
    n = len(X)
    bs = min(spec.batch_size, n)
    for epoch in range(spec.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, bs):
            idx = perm[start:start + bs]
            out, inputs, pre = net._forward_cached(X[idx])
            value, g = loss_fn(out, target[idx])
            if not np.isfinite(value):
                raise TrainingDiverged(f"non-finite loss {value} in epoch {epoch} (lr={spec.lr})")
            opt.step(net, net._backward(inputs, pre, g))
    return net


def train(net: DenseNet, X: np.ndarray, y: np.ndarray, spec: TrainSpec,
          rng: np.random.Generator, loss: str = "xent",
          X_val: np.ndarray | None = None, y_val: np.ndarray | None = None):
    """Train ``net`` in place with Adam on shuffled minibatches.

    Returns ``(net, error)`` where error is the classification error (``xent``)
    or mean squared error (``mse``) on the validation data, falling back to the
    training data when no validation split is given.
    """
    _fit(net, X, y, spec, rng, _LOSSES[loss])
    Xe, ye = (X, y) if X_val is None else (X_val, y_val)
    if loss == "xent":
        err = classification_error(net, Xe, ye)
    else:
        err = float(np.mean((net.forward(Xe) - ye) ** 2))
    if not np.isfinite(err) or not all(np.all(np.isfinite(l.W)) for l in net.layers):
        raise TrainingDiverged("weights became non-finite")
    return net, err


# -- transformations ----------------------------------------------------------

def relu_positions(net: DenseNet) -> list[int]:
    """Layer indices after which an identity layer can be inserted."""
    return [i for i, l in enumerate(net.layers) if l.activation == "relu"]


def insert_layer_identity(net: DenseNet, position: int | None = None,
                          rng: np.random.Generator | None = None) -> DenseNet:
    """Insert a width-preserving ReLU layer initialized to the identity after ``position``.

    The input is the output of a ReLU layer, hence non-negative, so the new
    layer computes exactly its input and the network function is unchanged.
    """
    valid = relu_positions(net)
    if position is None:
        if rng is None or not valid:
            raise ValueError("need an explicit position or an rng and a ReLU layer")
        position = int(rng.choice(valid))
    if position not in valid:
        raise ValueError(f"position {position} is not after a ReLU layer (valid: {valid})")
    child = net.copy()
    w = child.layers[position].n_out
    child.layers.insert(position + 1, Layer(np.eye(w), np.zeros(w), "relu"))
    return child


def unit_importance(net: DenseNet, layer_index: int) -> np.ndarray:
    """Sum of absolute outgoing weights of each unit in a hidden layer."""
    return np.abs(net.layers[layer_index + 1].W).sum(axis=0)


def prune_units(net: DenseNet, layer_index: int, keep_fraction: float) -> DenseNet:
    """Remove the least important units of hidden layer ``layer_index``."""
    if not 0 < keep_fraction <= 1:
        raise ValueError("keep_fraction must lie in (0, 1]")
    if not 0 <= layer_index < len(net.layers) - 1:
        raise ValueError(f"layer {layer_index} is not a hidden layer")
    w = net.layers[layer_index].n_out
    n_keep = w if keep_fraction == 1 else min(int(round(keep_fraction * w)), w - 1)
    if n_keep < 1:
        raise ValueError(f"pruning layer {layer_index} (width {w}) would leave no units")
    score = unit_importance(net, layer_index)
    order = np.argsort(-score, kind="stable")
    keep = np.sort(order[:n_keep])
    child = net.copy()
    layer, nxt = child.layers[layer_index], child.layers[layer_index + 1]
    layer.W, layer.b = layer.W[keep], layer.b[keep]
    nxt.W = nxt.W[:, keep]
    return child


def kl_to_teacher(student: DenseNet, teacher: DenseNet, X: np.ndarray,
                  temperature: float = 1.0) -> float:
    p_t = softmax(teacher.forward(X), temperature)
    return float(_kl(student.forward(X), p_t, temperature)[0])


def distill(student: DenseNet, teacher: DenseNet, X: np.ndarray, spec: TrainSpec,
            rng: np.random.Generator, temperature: float = 1.0) -> DenseNet:
    """Train ``student`` in place to match the teacher's softened outputs on ``X``.

    Only inputs are used; no labels enter the objective.
    """
    if student.sizes[0] != teacher.sizes[0] or student.sizes[-1] != teacher.sizes[-1]:
        raise ValueError("student and teacher must share input and output dimensions")
    target = softmax(teacher.forward(X), temperature)
    return _fit(student, X, target, spec, rng, lambda out, t: _kl(out, t, temperature))
