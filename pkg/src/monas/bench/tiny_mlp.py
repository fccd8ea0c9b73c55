"""Real training benchmark: dense ReLU classifiers on a seeded 2D Gaussian mixture."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from monas import mlp
from monas.bench.base import KEEP_FRACTIONS, Benchmark, stable_rng
from monas.space import SearchSpace, build_cnn_space

log = logging.getLogger(__name__)

FC_PARAMS = ("num_fc_layers", "num_neurons_1", "num_neurons_2", "num_neurons_3",
             "learning_rate", "batch_size")
SETUP_SECONDS = 0.5
COST_SCALE = 10.0


@dataclass(frozen=True)
class Dataset:
    X_train: np.ndarray
    y_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray
    n_classes: int


def gaussian_mixture(seed: int = 0, n_train: int = 1200, n_val: int = 400, n_classes: int = 4,
                     modes_per_class: int = 3, spread: float = 0.7) -> Dataset:
    """Each class is a mixture of isotropic Gaussians with centers in [-3, 3]^2."""
    rng = np.random.default_rng([seed, 7919])
    centers = rng.uniform(-3.0, 3.0, size=(n_classes, modes_per_class, 2))
    n = n_train + n_val
    y = rng.integers(n_classes, size=n)
    mode = rng.integers(modes_per_class, size=n)
    X = centers[y, mode] + spread * rng.normal(size=(n, 2))
    return Dataset(X[:n_train], y[:n_train], X[n_train:], y[n_train:], n_classes)


def fc_space() -> SearchSpace:
    full = build_cnn_space()
    return SearchSpace(tuple(p for p in full.params if p.name in FC_PARAMS))


def _widths(config: Mapping[str, Any]) -> list[int]:
    return [int(config[f"num_neurons_{i}"]) for i in range(1, int(config["num_fc_layers"]) + 1)]


def _arch(widths: list[int]) -> dict:
    out: dict = {"num_fc_layers": len(widths)}
    out.update({f"num_neurons_{i + 1}": w for i, w in enumerate(widths)})
    return out


class TinyMLP(Benchmark):
    """Objective 0: log10 of the parameter count (exact); objective 1: validation error."""

    name = "tiny_mlp"
    objective_names = ("log10_params", "error")
    transforms = ("log10", None)
    cheap_indices = (0,)
    architecture = ("num_fc_layers", "num_neurons_1", "num_neurons_2", "num_neurons_3")

    def __init__(self, seed: int = 0, n_train: int = 1200, n_val: int = 400, n_classes: int = 4):
        self.data = gaussian_mixture(seed, n_train, n_val, n_classes)
        space = fc_space()
        self.input_dim = self.data.X_train.shape[1]
        biggest = [int(space[f"num_neurons_{i}"].hi) for i in (1, 2, 3)]
        # error never exceeds 1 and the count is maximal for three widest layers
        reference = (1.1 * math.log10(mlp.mlp_param_count(self.sizes(_arch(biggest)))), 1.1)
        super().__init__(space, reference, seed)

    def sizes(self, config: Mapping[str, Any]) -> list[int]:
        return [self.input_dim, *_widths(config), self.data.n_classes]

    def param_count(self, config: Mapping[str, Any]) -> int:
        return mlp.mlp_param_count(self.sizes(config))

    def cheap(self, config):
        return np.array([math.log10(self.param_count(config))])

    def _spec(self, config, budget) -> mlp.TrainSpec:
        return mlp.TrainSpec(lr=float(config["learning_rate"]), batch_size=int(config["batch_size"]),
                             epochs=int(round(budget)))

    def _error(self, net) -> float:
        return mlp.classification_error(net, self.data.X_val, self.data.y_val)

    def _objectives(self, config, err) -> np.ndarray:
        return np.array([self.cheap(config)[0], err])

    def train_fresh(self, config, budget):
        rng = stable_rng(self.name, self.seed, self.key(config, budget))
        net = mlp.DenseNet.build(self.sizes(config), rng)
        d = self.data
        try:
            mlp.train(net, d.X_train, d.y_train, self._spec(config, budget), rng,
                      X_val=d.X_val, y_val=d.y_val)
        except mlp.TrainingDiverged as exc:
            log.warning("training diverged for %s: %s", dict(config), exc)
            return 1.0, None
        return self._error(net), net

    def evaluate(self, config, budget):
        return self._objectives(config, self.train_fresh(config, budget)[0])

    def cost(self, config, budget):
        """Simulated seconds: a fixed setup charge plus per-epoch terms fitted to measured
        numpy training times (per step, per step and parameter, per sample and parameter),
        scaled by ``COST_SCALE``."""
        n = len(self.data.X_train)
        steps = math.ceil(n / min(int(config["batch_size"]), n))
        p = self.param_count(config)
        epoch = 1.2e-4 * steps + 6e-9 * steps * p + 2e-9 * n * p
        return SETUP_SECONDS + COST_SCALE * float(budget) * epoch

    # -- morphism-based grow / shrink -----------------------------------------------
    def spawn(self, config, budget, rng):
        err, net = self.train_fresh(config, budget)
        return self._objectives(config, err), net

    def bulk_up(self, config, state, rng):
        widths = _widths(config)
        if state is None or len(widths) >= 3:
            return None
        pos = int(rng.choice(mlp.relu_positions(state)))
        child = mlp.insert_layer_identity(state, pos)
        widths.insert(pos + 1, widths[pos])
        return _arch(widths), ("grow", child)

    def cut_down(self, config, state, rng):
        """Prune every hidden layer that can shrink, each by its own keep fraction."""
        if state is None:
            return None
        widths = _widths(config)
        child, changed = state, False
        for layer, w in enumerate(widths):
            lo = int(self.space[f"num_neurons_{layer + 1}"].lo)
            kf = KEEP_FRACTIONS[int(rng.integers(len(KEEP_FRACTIONS)))]
            n_keep = min(int(round(kf * w)), w - 1)
            if n_keep < lo:
                continue
            child = mlp.prune_units(child, layer, kf)
            widths[layer] = n_keep
            changed = True
        if not changed:
            return None
        return _arch(widths), ("shrink", child)

    def develop(self, config, plan, parent_state, budget, rng):
        """Fine-tune a grown child on labels, or distill a pruned child from its parent.

        Distillation uses only the training inputs and the parent's outputs.
        """
        op, net = plan
        net = net.copy()
        spec = self._spec(config, budget)
        d = self.data
        try:
            if op == "grow":
                mlp.train(net, d.X_train, d.y_train, spec, rng)
            else:
                mlp.distill(net, parent_state, d.X_train, spec, rng)
                if not all(np.all(np.isfinite(l.W)) for l in net.layers):
                    raise mlp.TrainingDiverged("weights became non-finite")
        except mlp.TrainingDiverged as exc:
            log.warning("%s child diverged: %s", op, exc)
            return self._objectives(config, 1.0), None
        return self._objectives(config, self._error(net)), net
