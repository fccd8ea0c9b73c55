"""Local search driven by a neural-ensemble predictor and Thompson sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from monas import acquisition, pareto
from monas.fidelity import sh_promote
from monas.optimizers.base import Runner, RunHistory, StopRun, random_unique
from monas.space import config_key, encode_many, gaussian_perturb, sample_uniform
from monas.surrogate.ensemble import EnsemblePredictor


@dataclass(frozen=True)
class MoBananasParams:
    n_mut: int = 10
    sigma2: float = 0.1 ** 2
    n_new: int = 5
    init_size: int = 20
    sh_enabled: bool = False
    mutants_per_parent: int = 4
    n_members: int = 5
    hidden: tuple[int, ...] = (32, 32)
    epochs: int = 100
    max_resample: int = 20
    exact_cheap: bool = True

    def __post_init__(self) -> None:
        if self.init_size < 5:
            raise ValueError("init_size must be at least 5")
        if min(self.n_mut, self.n_new, self.mutants_per_parent) < 1 or self.sigma2 < 0:
            raise ValueError(f"invalid parameters {self}")
        if self.n_new > self.n_mut * self.mutants_per_parent:
            raise ValueError("n_new exceeds the number of mutants")


def sh_rungs(b_max: float) -> list[float]:
    """Three rungs at a quarter, half and all of the maximum budget."""
    return [max(1, math.floor(b_max / 4)), max(1, math.floor(b_max / 2)), b_max]


def run_mobananas(runner: Runner, params: MoBananasParams | None = None, ref=None,
                  seed: int = 0) -> RunHistory:
    params = params or MoBananasParams()
    bench = runner.benchmark
    space = bench.space
    ref = bench.reference if ref is None else np.asarray(ref, dtype=float)
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(params.sigma2)
    try:
        taken = runner.history.keys()
        init = []
        for _ in range(params.init_size):
            c = random_unique(space, rng, taken, params.max_resample)
            taken.add(config_key(c))
            init.append(c)
        runner.evaluate_batch(init, bench.b_max, [{"source": "init"}] * len(init))
        while True:
            recs = runner.history.final_records()
            Y = np.array([r.objectives for r in recs])
            X = encode_many(space, [r.config for r in recs])
            ens = EnsemblePredictor(params.n_members, params.hidden, params.epochs,
                                    seed=int(rng.integers(2 ** 31))).fit(X, Y)
            parents = [recs[i].config for i in pareto.nds_crowding_order(Y)[:params.n_mut]]
            taken = runner.history.keys()
            mutants = []
            for parent in parents:
                for _ in range(params.mutants_per_parent):
                    child = gaussian_perturb(space, parent, sigma, rng)
                    if config_key(child) in taken:
                        child = random_unique(space, rng, taken, params.max_resample)
                    taken.add(config_key(child))
                    mutants.append(child)
            mu, sd = ens.predict(encode_many(space, mutants))
            if params.exact_cheap and bench.cheap_indices:
                # size objectives need no model; plug in their exact values
                cheap = list(bench.cheap_indices)
                mu[:, cheap] = np.array([bench.cheap(c) for c in mutants])
                sd[:, cheap] = 0.0
            chosen = [mutants[i] for i in acquisition.thompson_select(mu, sd, params.n_new, rng)]
            if params.sh_enabled:
                rungs = sh_rungs(bench.b_max)
                for level, budget in enumerate(rungs):
                    Yc = np.array(runner.evaluate_batch(chosen, budget, [{"rung": level}] * len(chosen)))
                    if level < len(rungs) - 1:
                        chosen = [chosen[j] for j in sh_promote(Yc, 2, ref)]
            else:
                runner.evaluate_batch(chosen, bench.b_max, [{"source": "model"}] * len(chosen))
    except StopRun:
        pass
    return runner.history
