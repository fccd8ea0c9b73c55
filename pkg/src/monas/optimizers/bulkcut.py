"""Grow-then-shrink architecture search with constrained BO for the training hyperparameters.

Phase 1 samples random architectures, phase 2 grows parents with
function-preserving layer insertions and phase 3 shrinks them by pruning and
distillation. Parents come from epsilon-greedy descent through the NDS fronts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from monas import acquisition, pareto
from monas.optimizers.base import Runner, RunHistory, StopRun, child_rng
from monas.optimizers.msehvi import WarmGP
from monas.space import config_key, encode, encode_many, sample_uniform


@dataclass(frozen=True)
class BulkCutParams:
    t1: float = 0.2
    t2: float = 0.6
    t3: float = 1.0
    epsilon: float = 0.2
    pool_size: int = 200
    refine_steps: int = 5
    min_model_points: int = 3
    full_refit_every: int = 25
    keep_fronts: int = 5
    child_budget: float = 0.2

    def __post_init__(self) -> None:
        if not 0 <= self.t1 < self.t2 < self.t3:
            raise ValueError(f"phase boundaries must satisfy 0 <= T1 < T2 < T3, got {self.t1}, {self.t2}, {self.t3}")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.pool_size < 1:
            raise ValueError("pool_size must be positive")
        if not 0 < self.child_budget <= 1:
            raise ValueError("child_budget must lie in (0, 1]")


def paretsilon_greedy(objectives, epsilon: float, rng: np.random.Generator) -> int:
    """Index of a parent: stay at the current front with probability 1 - epsilon, else peel it.

    Within a front every member is equally likely. The last remaining front is
    always accepted.
    """
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    Y = np.asarray(objectives, dtype=float)
    if len(Y) == 0:
        raise ValueError("empty population")
    fronts = pareto.nds(Y)
    for i, front in enumerate(fronts):
        if i == len(fronts) - 1 or rng.random() >= epsilon:
            return int(front[int(rng.integers(len(front)))])
    raise AssertionError("unreachable")


def _forget_deep(states: dict, history: RunHistory, keep_fronts: int) -> None:
    """Drop model states of records outside the first ``keep_fronts`` fronts (rarely chosen)."""
    fronts = pareto.nds(history.objectives())
    keep = {i for f in fronts[:keep_fronts] for i in f}
    for k in [k for k in states if k not in keep]:
        del states[k]


def phase_of(progress: float, params: BulkCutParams) -> int:
    if progress < params.t1:
        return 1
    if progress < params.t2:
        return 2
    return 3


def run_bulkcut(runner: Runner, params: BulkCutParams | None = None, ref=None, seed: int = 0) -> RunHistory:
    params = params or BulkCutParams()
    bench = runner.benchmark
    space = bench.space
    ref = bench.reference if ref is None else np.asarray(ref, dtype=float)
    if not bench.cheap_indices or len(bench.expensive_indices) != 1:
        raise ValueError("grow/shrink search needs cheap size objectives and one expensive objective")
    e = bench.expensive_indices[0]
    arch_idx = [space.index(n) for n in bench.architecture]
    rng = np.random.default_rng(seed)
    gp = WarmGP(params.full_refit_every)
    states: dict[int, object] = {}
    budget = bench.b_max

    def propose_rest(arch: dict) -> dict:
        """Training hyperparameters for a fixed architecture via masked acquisition maximization."""
        recs = runner.history.records
        if len(recs) < params.min_model_points:
            return bench.split(space.repair(arch, rng))[1]
        X = encode_many(space, [r.config for r in recs])
        Y = runner.history.objectives()
        model = gp.fit(X, Y[:, e])
        front = Y[pareto.pareto_front(Y)]
        fixed = encode(space, arch)
        mask = {i: float(fixed[i]) for i in arch_idx}
        cheap = bench.cheap(space.repair(arch, rng))

        def score(configs):
            mu, sd = model.predict(encode_many(space, configs))
            return acquisition.ms_ehvi(front, ref, mu, sd, np.tile(cheap, (len(configs), 1)), expensive=e)

        best, value = acquisition.maximize_acquisition(
            space, score, params.pool_size, rng, mask=mask, exclude=runner.history.keys(),
            refine_steps=params.refine_steps, return_score=True)
        if value <= 0:
            # no expected improvement anywhere: fall back to the best predicted mean
            def lcb(configs):
                mu, sd = model.predict(encode_many(space, configs))
                return -(mu - sd)
            best = acquisition.maximize_acquisition(space, lcb, params.pool_size, rng, mask=mask,
                                                    exclude=runner.history.keys(), refine_steps=0)
        return bench.split(best)[1]

    def pick_parent(op: str):
        candidates = list(runner.history.records)
        while candidates:
            Y = np.array([r.objectives for r in candidates])
            parent = candidates[paretsilon_greedy(Y, params.epsilon, rng)]
            hook = bench.bulk_up if op == "grow" else bench.cut_down
            out = hook(parent.config, states.get(parent.eval_id), rng)
            if out is not None:
                return parent, out
            candidates = [r for r in candidates if r.eval_id != parent.eval_id]
        return None, None

    try:
        while True:
            runner.check()
            phase = phase_of(runner.progress(), params)
            parent, plan, op = None, None, "random"
            if phase == 1 or not runner.history.records:
                arch = bench.random_architecture(rng)
            else:
                op = "grow" if phase == 2 else "shrink"
                parent, out = pick_parent(op)
                if parent is None:
                    arch, op = bench.random_architecture(rng), "random"
                else:
                    arch, plan = out
            config = space.repair({**arch, **propose_rest(arch)}, rng)
            space.validate(config)
            meta = {"phase": phase, "op": op, "parent": None if parent is None else parent.eval_id}
            sub = child_rng(rng)
            b = budget
            if parent is None:
                fn = lambda: bench.spawn(config, b, sub)
            else:
                pstate = states.get(parent.eval_id)
                if pstate is not None:
                    # inherited weights only need a short fine-tune or distillation
                    b = max(1, round(params.child_budget * budget))
                fn = lambda: bench.develop(config, plan, pstate, b, sub)
            _, state, rec = runner.evaluate_custom(config, b, fn, meta)
            if state is not None:
                states[rec.eval_id] = state
                _forget_deep(states, runner.history, params.keep_fronts)
    except StopRun:
        pass
    return runner.history
