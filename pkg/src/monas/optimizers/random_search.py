from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from monas.optimizers.base import Runner, RunHistory, StopRun
from monas.space import sample_uniform


@dataclass(frozen=True)
class RandomSearchParams:
    batch_size: int = 1

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


def run_random_search(runner: Runner, params: RandomSearchParams | None = None, ref=None,
                      seed: int = 0) -> RunHistory:
    """Uniform samples evaluated at the maximum budget until the stop criterion hits."""
    params = params or RandomSearchParams()
    bench = runner.benchmark
    rng = np.random.default_rng(seed)
    try:
        while True:
            batch = [sample_uniform(bench.space, rng) for _ in range(params.batch_size)]
            runner.evaluate_batch(batch, bench.b_max)
    except StopRun:
        pass
    return runner.history
