"""Hyperband with multi-objective TPE sampling and NDS/HSSP promotion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from monas import pareto
from monas.fidelity import hb_brackets, rung_budget, sh_promote
from monas.optimizers.base import Runner, RunHistory, StopRun
from monas.space import SearchSpace, config_key, decode, encode_many, sample_uniform
from monas.surrogate.kde import KDEPair, kde_fit


@dataclass(frozen=True)
class MobohbParams:
    b_min: float = 5.0
    b_max: float = 25.0
    eta: int = 3
    rho: float = 1.0 / 6.0
    gamma: float = 0.1
    n_samples: int = 24
    n_min: int | None = None  # defaults to 2 * dim + 1
    bw_factor: float = 1.0
    max_resample: int = 20

    def __post_init__(self) -> None:
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.eta < 2 or self.n_samples < 1 or not 0 < self.b_min <= self.b_max:
            raise ValueError(f"invalid parameters {self}")
        if self.n_min is not None and self.n_min < 1:
            raise ValueError("n_min must be positive")


def n_good(n: int, gamma: float, n_min: int) -> int:
    return max(n_min, int(math.floor(gamma * n)))


def split_good_bad(objectives: np.ndarray, k: int, ref) -> tuple[list[int], list[int]]:
    """Take whole NDS fronts while they fit, then the HSSP-greedy best of the straddling front."""
    good: list[int] = []
    for front in pareto.nds(objectives):
        if len(good) + len(front) <= k:
            good.extend(front)
        else:
            need = k - len(good)
            if need > 0:
                picked = pareto.hssp_greedy(objectives[front], need, ref)
                good.extend(front[i] for i in picked)
            break
    chosen = set(good)
    return sorted(good), [i for i in range(len(objectives)) if i not in chosen]


class TpeSampler:
    """Proposes configurations from good/bad density ratios over the largest usable budget."""

    def __init__(self, space: SearchSpace, params: MobohbParams, ref, rng: np.random.Generator):
        self.space = space
        self.params = params
        self.ref = np.asarray(ref, dtype=float)
        self.rng = rng
        self.n_min = params.n_min if params.n_min is not None else 2 * space.dim + 1
        self.observations: dict[float, list[tuple[dict, np.ndarray]]] = {}
        self._cache: dict[tuple[float, int], KDEPair] = {}

    def observe(self, config, budget: float, y) -> None:
        self.observations.setdefault(float(budget), []).append((config, np.asarray(y, dtype=float)))

    def model_budget(self) -> float | None:
        usable = [b for b, obs in self.observations.items() if len(obs) >= self.n_min + 2]
        return max(usable) if usable else None

    def model(self, budget: float) -> KDEPair:
        obs = self.observations[budget]
        key = (budget, len(obs))
        if key not in self._cache:
            Y = np.array([y for _, y in obs])
            good, bad = split_good_bad(Y, n_good(len(obs), self.params.gamma, self.n_min), self.ref)
            configs = [c for c, _ in obs]
            X = encode_many(self.space, configs)
            self._cache = {key: kde_fit(self._impute(X[good], [configs[i] for i in good]),
                                        self._impute(X[bad], [configs[i] for i in bad]),
                                        bw_factor=self.params.bw_factor)}
        return self._cache[key]

    def _impute(self, X: np.ndarray, configs: list[dict]) -> np.ndarray:
        """Fill inactive coordinates with values of the same dimension from rows where it is
        active (uniform noise if it is active nowhere), so they do not pile up at 0."""
        X = X.copy()
        for j, p in enumerate(self.space.params):
            active = np.array([p.name in c for c in configs])
            if active.all():
                continue
            donors = X[active, j]
            n_fill = int((~active).sum())
            X[~active, j] = (self.rng.choice(donors, size=n_fill) if len(donors)
                             else self.rng.random(n_fill))
        return X

    def propose(self, taken: set[str]) -> tuple[dict, str]:
        budget = self.model_budget()
        if budget is None or self.rng.random() < self.params.rho:
            return self._random(taken), "random"
        pair = self.model(budget)
        X = pair.sample_good(self.rng, self.params.n_samples)
        scores = pair.log_ratio(X)
        samples = [decode(self.space, x) for x in X]
        for i in np.argsort(-scores, kind="stable"):
            if config_key(samples[i]) not in taken:
                return samples[i], "model"
        return self._random(taken), "random"

    def _random(self, taken: set[str]) -> dict:
        for _ in range(self.params.max_resample):
            c = sample_uniform(self.space, self.rng)
            if config_key(c) not in taken:
                return c
        return c


def run_mobohb(runner: Runner, params: MobohbParams | None = None, ref=None, seed: int = 0) -> RunHistory:
    params = params or MobohbParams()
    bench = runner.benchmark
    ref = bench.reference if ref is None else np.asarray(ref, dtype=float)
    rng = np.random.default_rng(seed)
    sampler = TpeSampler(bench.space, params, ref, rng)
    brackets = hb_brackets(params.b_min, params.b_max, params.eta)
    try:
        while True:
            for br in brackets:
                taken = runner.history.keys()
                configs, sources = [], []
                for _ in range(br.n_configs):
                    c, src = sampler.propose(taken)
                    taken.add(config_key(c))
                    configs.append(c)
                    sources.append(src)
                for i in range(br.s + 1):
                    budget = rung_budget(params.b_max, params.eta, br.s - i)
                    metas = [{"bracket": br.s, "rung": i, "source": s} for s in sources]
                    Y = np.array(runner.evaluate_batch(configs, budget, metas))
                    for c, y in zip(configs, Y):
                        sampler.observe(c, budget, y)
                    if i < br.s:
                        keep = sh_promote(Y, params.eta, ref)
                        configs = [configs[j] for j in keep]
                        sources = [sources[j] for j in keep]
    except StopRun:
        pass
    return runner.history
