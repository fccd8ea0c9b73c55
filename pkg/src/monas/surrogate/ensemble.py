"""Ensemble of small dense regressors; spread across members is the uncertainty."""

from __future__ import annotations

import numpy as np

from monas import mlp


class EnsemblePredictor:
    def __init__(self, n_members: int = 5, hidden: tuple[int, ...] = (64, 64), epochs: int = 200,
                 lr: float = 1e-3, batch_size: int = 32, seed: int = 0):
        if n_members < 2:
            raise ValueError("an ensemble needs at least two members")
        self.n_members = n_members
        self.hidden = tuple(hidden)
        self.spec = mlp.TrainSpec(lr=lr, batch_size=batch_size, epochs=epochs)
        self.seed = seed
        self.members: list[mlp.DenseNet] = []

    def fit(self, X, Y) -> "EnsemblePredictor":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        self._mu = Y.mean(axis=0)
        self._sd = Y.std(axis=0)
        self._sd[self._sd <= 0] = 1.0
        Z = (Y - self._mu) / self._sd
        sizes = [X.shape[1], *self.hidden, Y.shape[1]]
        self.members = []
        for i in range(self.n_members):
            rng = np.random.default_rng([self.seed, i])
            net = mlp.DenseNet.build(sizes, rng)
            mlp.train(net, X, Z, self.spec, rng, loss="mse")
            self.members.append(net)
        return self

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Per-objective mean and (unbiased) standard deviation across members."""
        if not self.members:
            raise RuntimeError("predict called before fit")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        preds = np.stack([m.forward(X) for m in self.members]) * self._sd + self._mu
        return preds.mean(axis=0), preds.std(axis=0, ddof=1)


def ensemble_fit(X, Y, seed: int = 0, **kwargs) -> EnsemblePredictor:
    return EnsemblePredictor(seed=seed, **kwargs).fit(X, Y)
