"""Analytic multi-objective test functions on the unit cube."""

from __future__ import annotations

from typing import Any, Mapping

import numpy as np

from monas.bench.base import KEEP_FRACTIONS, Benchmark, stable_rng
from monas.space import ParamSpec, SearchSpace


def unit_cube_space(d: int) -> SearchSpace:
    if d < 2:
        raise ValueError("need at least two continuous dimensions")
    return SearchSpace(tuple(ParamSpec(f"x{i + 1}", "continuous", lo=0.0, hi=1.0) for i in range(d)))


def zdt1(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f1 = x[0]
    g = 1.0 + 9.0 * np.mean(x[1:])
    return np.array([f1, g * (1.0 - np.sqrt(f1 / g))])


def dtlz2(x, m: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if len(x) < m:
        raise ValueError("DTLZ2 needs at least m variables")
    g = np.sum((x[m - 1:] - 0.5) ** 2)
    theta = x[:m - 1] * np.pi / 2
    f = np.full(m, 1.0 + g)
    for i in range(m):
        f[i] *= np.prod(np.cos(theta[:m - 1 - i]))
        if i > 0:
            f[i] *= np.sin(theta[m - 1 - i])
    return f


class _UnitCube(Benchmark):
    def __init__(self, d: int, reference, seed: int = 0, fidelity_noise: float = 0.0):
        super().__init__(unit_cube_space(d), reference, seed)
        self.d = d
        self.fidelity_noise = fidelity_noise

    def vector(self, config: Mapping[str, Any]) -> np.ndarray:
        return np.array([float(config[n]) for n in self.space.names])

    def _noise(self, config, budget) -> np.ndarray:
        if self.fidelity_noise <= 0 or budget >= self.b_max:
            return np.zeros(self.n_objectives)
        scale = self.fidelity_noise * (1.0 - max(float(budget), 0.0) / self.b_max)
        rng = stable_rng(self.name, self.seed, self.key(config, budget))
        return scale * np.abs(rng.normal(size=self.n_objectives))

    def describe(self) -> dict:
        return {**super().describe(), "fidelity_noise": self.fidelity_noise}


class ZDT1(_UnitCube):
    """ZDT1; objective 0 (= x1) counts as the cheap, exactly known objective.

    Low budgets add non-negative noise scaled by ``fidelity_noise * (1 - b/b_max)``
    to the expensive objective only. ``x1`` plays the role of the architecture
    for the grow/shrink search.
    """

    name = "zdt1"
    objective_names = ("f1", "f2")
    transforms = (None, None)
    cheap_indices = (0,)
    architecture = ("x1",)
    # f1 <= 1 and f2 <= g <= 10 everywhere, scaled by 1.1
    REFERENCE = (1.1, 11.0)

    def __init__(self, d: int = 6, seed: int = 0, fidelity_noise: float = 0.0, reference=None):
        super().__init__(d, self.REFERENCE if reference is None else reference, seed, fidelity_noise)

    def evaluate(self, config, budget):
        f = zdt1(self.vector(config))
        f[1] += self._noise(config, budget)[1]
        return f

    def cheap(self, config):
        return np.array([float(config["x1"])])

    def _snap_x1(self, v: float) -> float:
        p = self.space["x1"]
        return p.decode(p.encode(v))

    def bulk_up(self, config, state, rng):
        x1 = float(config["x1"])
        new = self._snap_x1(x1 + (1.0 - x1) * rng.uniform(0.1, 0.5))
        return ({"x1": new}, None) if new > x1 else None

    def cut_down(self, config, state, rng):
        x1 = float(config["x1"])
        new = self._snap_x1(x1 * float(rng.choice(KEEP_FRACTIONS)))
        return ({"x1": new}, None) if new < x1 else None


class DTLZ2(_UnitCube):
    name = "dtlz2"
    transforms = (None, None, None)

    def __init__(self, m: int = 3, d: int | None = None, seed: int = 0, fidelity_noise: float = 0.0,
                 reference=None):
        d = m + 4 if d is None else d
        self.m = m
        self.objective_names = tuple(f"f{i + 1}" for i in range(m))
        self.transforms = (None,) * m
        # each f_i <= 1 + g and g <= (d - m + 1) / 4, scaled by 1.1
        ref = [1.1 * (1.0 + (d - m + 1) / 4.0)] * m if reference is None else reference
        super().__init__(d, ref, seed, fidelity_noise)

    def evaluate(self, config, budget):
        return dtlz2(self.vector(config), self.m) + self._noise(config, budget)
