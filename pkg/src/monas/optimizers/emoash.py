"""Evolutionary multi-objective search over a doubling budget ladder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from monas import pareto
from monas.fidelity import emoash_ladder
from monas.optimizers.base import Runner, RunHistory, StopRun
from monas.space import mutate_k, recombine, sample_uniform


@dataclass(frozen=True)
class EmoashParams:
    fe_total: int = 300
    mu: int = 20
    b_max: float | None = None
    n_sh: int = 3
    tournament_k: int = 3
    mutate_k: int = 5

    def __post_init__(self) -> None:
        if min(self.fe_total, self.mu, self.n_sh, self.tournament_k, self.mutate_k) < 1:
            raise ValueError(f"all parameters must be positive: {self}")
        if self.tournament_k > self.mu:
            raise ValueError("tournament size exceeds population size")


def tournament(ranks: np.ndarray, crowd: np.ndarray, k: int, rng: np.random.Generator) -> int:
    """Best of ``k`` distinct random members by NDS rank, then larger crowding distance."""
    entrants = rng.choice(len(ranks), size=k, replace=False)
    return int(min(entrants, key=lambda i: (ranks[i], -crowd[i], i)))


def remove_poor(objectives: np.ndarray, ref) -> int:
    """Index of the member to drop: least hypervolume contributor of the worst front."""
    worst = pareto.nds(objectives)[-1]
    if len(worst) == 1:
        return worst[0]
    return worst[pareto.hssp_remove_one(objectives[worst], ref)]


def run_emoash(runner: Runner, params: EmoashParams | None = None, ref=None, seed: int = 0) -> RunHistory:
    params = params or EmoashParams()
    bench = runner.benchmark
    ref = bench.reference if ref is None else np.asarray(ref, dtype=float)
    b_max = params.b_max or bench.b_max
    ladder = emoash_ladder(params.fe_total, b_max, params.n_sh)
    rng = np.random.default_rng(seed)
    population = [sample_uniform(bench.space, rng) for _ in range(params.mu)]
    try:
        for level, rung in enumerate(ladder):
            Y = np.array(runner.evaluate_batch(population, rung.budget,
                                               [{"rung": level, "op": "reevaluate"}] * len(population)))
            for _ in range(max(rung.fe - params.mu, 0)):
                ranks, crowd = pareto.rank_and_crowding(Y)
                if rng.random() < 0.5:
                    parent = population[tournament(ranks, crowd, params.tournament_k, rng)]
                    child, op = mutate_k(bench.space, parent, params.mutate_k, rng), "mutate"
                else:
                    a = population[tournament(ranks, crowd, params.tournament_k, rng)]
                    b = population[tournament(ranks, crowd, params.tournament_k, rng)]
                    child, op = recombine(bench.space, a, b, rng), "recombine"
                y = runner.evaluate(child, rung.budget, {"rung": level, "op": op})
                pool = population + [child]
                Yp = np.vstack([Y, y])
                poor = remove_poor(Yp, ref)
                population = [c for i, c in enumerate(pool) if i != poor]
                Y = np.delete(Yp, poor, axis=0)
    except StopRun:
        pass
    return runner.history
