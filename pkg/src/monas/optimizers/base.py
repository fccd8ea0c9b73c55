"""Run histories, stop criteria and the evaluation context shared by all optimizers."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from monas import pareto
from monas.bench.base import Benchmark
from monas.space import Configuration, SearchSpace, config_key, sample_uniform


class StopRun(Exception):
    """Raised inside an optimizer loop once the stop criterion is met."""


@dataclass(frozen=True)
class Stop:
    max_evaluations: int | None = None
    max_seconds: float | None = None

    def __post_init__(self) -> None:
        if self.max_evaluations is None and self.max_seconds is None:
            raise ValueError("a stop criterion needs max_evaluations and/or max_seconds")
        if self.max_evaluations is not None and self.max_evaluations < 0:
            raise ValueError("max_evaluations must be non-negative")
        if self.max_seconds is not None and self.max_seconds < 0:
            raise ValueError("max_seconds must be non-negative")


@dataclass(frozen=True)
class Record:
    eval_id: int
    config: Configuration
    budget: float
    objectives: tuple[float, ...]
    wall_time_s: float
    meta: dict = field(default_factory=dict)


class RunHistory:
    """Append-only log of evaluations; eval ids are dense from 0."""

    def __init__(self, n_objectives: int):
        self.n_objectives = n_objectives
        self.records: list[Record] = []

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def append(self, config, budget, objectives, wall_time_s, meta=None) -> Record:
        if self.records and wall_time_s < self.records[-1].wall_time_s:
            raise ValueError("wall time must be non-decreasing")
        objs = tuple(float(v) for v in objectives)
        if len(objs) != self.n_objectives:
            raise ValueError(f"expected {self.n_objectives} objectives, got {len(objs)}")
        rec = Record(len(self.records), dict(config), float(budget), objs, float(wall_time_s), dict(meta or {}))
        self.records.append(rec)
        return rec

    def objectives(self) -> np.ndarray:
        return np.array([r.objectives for r in self.records]).reshape(len(self.records), self.n_objectives)

    def final_records(self) -> list[Record]:
        """The highest-budget record of every configuration (latest one on budget ties)."""
        best: dict[str, Record] = {}
        for r in self.records:
            k = config_key(r.config)
            if k not in best or r.budget >= best[k].budget:
                best[k] = r
        return sorted(best.values(), key=lambda r: r.eval_id)

    def pareto_records(self) -> list[Record]:
        recs = self.final_records()
        if not recs:
            return []
        return [recs[i] for i in pareto.pareto_front(np.array([r.objectives for r in recs]))]

    def hypervolume_curve(self, ref: Sequence[float]) -> list[tuple[float, int, float]]:
        """(wall time, evaluations, hypervolume of all evaluated points) after each record."""
        ref = np.asarray(ref, dtype=float)
        out = []
        front = np.empty((0, self.n_objectives))
        for r in self.records:
            y = np.asarray(r.objectives)
            if np.all(y < ref) and not np.any(np.all(front <= y, axis=1)):
                front = np.vstack([front[~np.all(y <= front, axis=1)], y])
            out.append((r.wall_time_s, r.eval_id + 1, pareto.hypervolume(front, ref) if len(front) else 0.0))
        return out

    def final_hypervolume(self, ref: Sequence[float]) -> float:
        curve = self.hypervolume_curve(ref)
        return curve[-1][2] if curve else 0.0

    def hypervolume_at(self, ref: Sequence[float], n_evals: int) -> float:
        curve = self.hypervolume_curve(ref)[:n_evals]
        return curve[-1][2] if curve else 0.0

    def keys(self) -> set[str]:
        return {config_key(r.config) for r in self.records}


class Runner:
    """Evaluates configurations against a benchmark, enforcing the stop criterion.

    Time is simulated by default: every evaluation advances the clock by the
    benchmark's ``cost(config, budget)``, which makes histories reproducible.
    With ``clock="wall"`` real elapsed seconds are recorded instead.
    Batches may be computed on ``workers`` threads; results are committed in
    candidate order, so the history does not depend on the worker count.
    """

    def __init__(self, benchmark: Benchmark, stop: Stop, workers: int = 1, clock: str = "simulated"):
        if workers < 1:
            raise ValueError("workers must be at least 1")
        if clock not in ("simulated", "wall"):
            raise ValueError(f"unknown clock {clock!r}")
        self.benchmark = benchmark
        self.stop = stop
        self.workers = workers
        self.clock = clock
        self.history = RunHistory(benchmark.n_objectives)
        self._sim_time = 0.0
        self._start = time.perf_counter()

    # -- clock & budget ------------------------------------------------------------
    def now(self) -> float:
        return self._sim_time if self.clock == "simulated" else time.perf_counter() - self._start

    def exhausted(self) -> bool:
        s = self.stop
        if s.max_evaluations is not None and len(self.history) >= s.max_evaluations:
            return True
        return s.max_seconds is not None and self.now() >= s.max_seconds

    def progress(self) -> float:
        """Fraction of the stop budget used (the larger of evaluations and time)."""
        s = self.stop
        fr = 0.0
        if s.max_evaluations:
            fr = max(fr, len(self.history) / s.max_evaluations)
        if s.max_seconds:
            fr = max(fr, self.now() / s.max_seconds)
        if (s.max_evaluations == 0) or (s.max_seconds == 0):
            fr = 1.0
        return min(fr, 1.0)

    def remaining_evaluations(self) -> int | None:
        if self.stop.max_evaluations is None:
            return None
        return max(self.stop.max_evaluations - len(self.history), 0)

    def check(self) -> None:
        if self.exhausted():
            raise StopRun

    # -- evaluation ----------------------------------------------------------------
    def _commit(self, config, budget, objectives, meta) -> Record:
        if self.clock == "simulated":
            self._sim_time += float(self.benchmark.cost(config, budget))
        return self.history.append(config, budget, objectives, self.now(), meta)

    def evaluate(self, config: Mapping[str, Any], budget: float, meta: dict | None = None) -> np.ndarray:
        return self.evaluate_batch([config], budget, [meta])[0]

    def evaluate_batch(self, configs: Sequence[Mapping[str, Any]], budget: float,
                       metas: Sequence[dict | None] | None = None) -> list[np.ndarray]:
        """Evaluate all configs (or as many as the budget allows, then raise StopRun)."""
        self.check()
        metas = list(metas) if metas is not None else [None] * len(configs)
        configs = list(configs)
        rem = self.remaining_evaluations()
        todo = configs if rem is None else configs[:rem]
        results = self._map(lambda c: self.benchmark.evaluate(c, budget), todo)
        out = []
        for config, y, meta in zip(todo, results, metas):
            self.check()
            self._commit(config, budget, y, meta)
            out.append(np.asarray(y, dtype=float))
        if len(out) < len(configs):
            raise StopRun
        return out

    def evaluate_custom(self, config: Mapping[str, Any], budget: float,
                        fn: Callable[[], tuple[np.ndarray, Any]], meta: dict | None = None):
        """Run ``fn`` (returning ``(objectives, state)``) as one evaluation of ``config``."""
        self.check()
        y, state = fn()
        rec = self._commit(config, budget, y, meta)
        return np.asarray(y, dtype=float), state, rec

    def _map(self, fn, items):
        if self.workers == 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))


def child_rng(rng: np.random.Generator) -> np.random.Generator:
    return np.random.default_rng(int(rng.integers(2 ** 63)))


def random_unique(space: SearchSpace, rng: np.random.Generator, taken: set[str], tries: int = 20) -> Configuration:
    """A uniform sample not in ``taken`` (the last draw if ``tries`` draws all collide)."""
    for _ in range(max(tries, 1)):
        c = sample_uniform(space, rng)
        if config_key(c) not in taken:
            return c
    return c
