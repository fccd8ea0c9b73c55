"""Benchmark interface shared by all objective evaluators."""

from __future__ import annotations

import hashlib
import json
from typing import Any, Mapping

import numpy as np

from monas.space import Configuration, SearchSpace, config_key, sample_uniform

KEEP_FRACTIONS = (0.5, 0.625, 0.75, 0.875)


def stable_rng(*parts: Any) -> np.random.Generator:
    """Generator seeded from a process-independent hash of ``parts``."""
    digest = hashlib.sha256(json.dumps(parts, sort_keys=True, default=str).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


class Benchmark:
    """A (Configuration, budget) -> objective vector map, minimized componentwise.

    Subclasses set ``name``, ``space``, ``n_objectives``, ``reference`` and
    ``architecture`` (the parameters that define model structure), and list
    objectives computable without training in ``cheap_indices``.
    """

    name = "benchmark"
    objective_names: tuple[str, ...] = ()
    transforms: tuple[str | None, ...] = ()
    cheap_indices: tuple[int, ...] = ()
    architecture: tuple[str, ...] = ()
    b_max: float = 25.0

    def __init__(self, space: SearchSpace, reference, seed: int = 0):
        self.space = space
        self.reference = np.asarray(reference, dtype=float)
        self.seed = seed

    @property
    def n_objectives(self) -> int:
        return len(self.reference)

    @property
    def expensive_indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n_objectives) if i not in self.cheap_indices)

    def describe(self) -> dict:
        return {"name": self.name, "objectives": list(self.objective_names),
                "transforms": list(self.transforms), "cheap": list(self.cheap_indices),
                "reference": self.reference.tolist(), "b_max": self.b_max, "dim": self.space.dim}

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, config: Mapping[str, Any], budget: float) -> np.ndarray:
        raise NotImplementedError

    def cheap(self, config: Mapping[str, Any]) -> np.ndarray | None:
        """Exact values of the cheap objectives, or None if there are none."""
        return None

    def cost(self, config: Mapping[str, Any], budget: float) -> float:
        """Simulated wall-clock seconds an evaluation takes."""
        return float(budget) / self.b_max

    # -- structural variation (used by the grow/shrink search) -----------------
    def split(self, config: Mapping[str, Any]) -> tuple[Configuration, Configuration]:
        arch = {k: v for k, v in config.items() if k in self.architecture}
        rest = {k: v for k, v in config.items() if k not in self.architecture}
        return arch, rest

    def random_architecture(self, rng: np.random.Generator) -> Configuration:
        return self.split(sample_uniform(self.space, rng))[0]

    def spawn(self, config: Mapping[str, Any], budget: float, rng: np.random.Generator):
        """Evaluate a freshly initialized model; returns ``(objectives, state)``."""
        return self.evaluate(config, budget), None

    def bulk_up(self, config: Mapping[str, Any], state, rng: np.random.Generator):
        """Grow ``config``'s architecture; returns ``(child_arch, plan)`` or None."""
        return None

    def cut_down(self, config: Mapping[str, Any], state, rng: np.random.Generator):
        """Shrink ``config``'s architecture; returns ``(child_arch, plan)`` or None."""
        return None

    def develop(self, config: Mapping[str, Any], plan, parent_state, budget: float,
                rng: np.random.Generator):
        """Evaluate an offspring produced by ``bulk_up``/``cut_down``."""
        return self.evaluate(config, budget), None

    def key(self, config: Mapping[str, Any], budget: float) -> str:
        return f"{config_key(config)}@{budget!r}"
