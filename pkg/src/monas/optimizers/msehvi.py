"""GP-based EHVI search where only the expensive objective is modelled.

The ``model_cheap=True`` variant models every objective with its own GP and
uses plain EHVI, which serves as the comparison baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from monas import acquisition, pareto
from monas.optimizers.base import Runner, RunHistory, StopRun, random_unique
from monas.space import config_key, encode_many
from monas.surrogate.gp import GPFitError, GPModel, gp_fit


@dataclass(frozen=True)
class MsEhviParams:
    pool_size: int = 500
    init_size: int = 10
    model_cheap: bool = False
    full_refit_every: int = 25
    refine_steps: int = 10
    max_resample: int = 20

    def __post_init__(self) -> None:
        if self.pool_size < 1 or self.init_size < 2 or self.full_refit_every < 1:
            raise ValueError(f"invalid parameters {self}")


class WarmGP:
    """Refits a GP after every observation, warm-started from the previous optimum."""

    def __init__(self, full_refit_every: int = 25):
        self.every = full_refit_every
        self.theta: np.ndarray | None = None
        self.fits = 0

    def fit(self, X, y) -> GPModel:
        full = self.theta is None or self.fits % self.every == 0
        try:
            model = gp_fit(X, y, init=self.theta, n_starts=2 if full else 1, maxiter=100 if full else 25)
        except GPFitError:
            model = gp_fit(X, y, init=None, n_starts=3)
        self.theta = model.theta
        self.fits += 1
        return model


def run_msehvi(runner: Runner, params: MsEhviParams | None = None, ref=None, seed: int = 0) -> RunHistory:
    params = params or MsEhviParams()
    bench = runner.benchmark
    ref = bench.reference if ref is None else np.asarray(ref, dtype=float)
    m = bench.n_objectives
    if not params.model_cheap:
        if not bench.cheap_indices:
            raise ValueError(f"benchmark {bench.name!r} exposes no cheap objectives")
        if len(bench.expensive_indices) != 1:
            raise ValueError("exactly one expensive objective is supported")
    elif m != 2:
        raise ValueError("the all-objectives-modelled variant supports two objectives")
    rng = np.random.default_rng(seed)
    space = bench.space
    modelled = list(range(m)) if params.model_cheap else list(bench.expensive_indices)
    gps = {j: WarmGP(params.full_refit_every) for j in modelled}
    try:
        taken = runner.history.keys()
        init = []
        for _ in range(params.init_size):
            c = random_unique(space, rng, taken, params.max_resample)
            taken.add(config_key(c))
            init.append(c)
        runner.evaluate_batch(init, bench.b_max, [{"source": "init"}] * len(init))
        while True:
            recs = runner.history.records
            X = encode_many(space, [r.config for r in recs])
            Y = runner.history.objectives()
            front = Y[pareto.pareto_front(Y)]
            models = {j: gps[j].fit(X, Y[:, j]) for j in modelled}

            if params.model_cheap:
                def score(configs):
                    Xc = encode_many(space, configs)
                    mu = np.empty((len(configs), m))
                    sd = np.empty((len(configs), m))
                    for j, gp in models.items():
                        mu[:, j], sd[:, j] = gp.predict(Xc)
                    return acquisition.ehvi_2d(front, ref, mu, sd)
            else:
                e = modelled[0]

                def score(configs):
                    mu, sd = models[e].predict(encode_many(space, configs))
                    cheap = np.array([bench.cheap(c) for c in configs])
                    return acquisition.ms_ehvi(front, ref, mu, sd, cheap, expensive=e)

            cand = acquisition.maximize_acquisition(space, score, params.pool_size, rng,
                                                    exclude=runner.history.keys(),
                                                    refine_steps=params.refine_steps)
            if config_key(cand) in runner.history.keys():
                cand = random_unique(space, rng, runner.history.keys(), params.max_resample)
            runner.evaluate(cand, bench.b_max, {"source": "model"})
    except StopRun:
        pass
    return runner.history


def run_ehvi(runner: Runner, params: MsEhviParams | None = None, ref=None, seed: int = 0) -> RunHistory:
    params = params or MsEhviParams()
    return run_msehvi(runner, MsEhviParams(**{**params.__dict__, "model_cheap": True}), ref, seed)
