"""Command-line harness: seeded runs, run artifacts and multi-seed comparison.

Config files are JSON::

    {
      "benchmark": {"name": "zdt1", "params": {"d": 6}},
      "method": {"name": "emoash", "params": {"fe_total": 300, "mu": 20}},
      "seed": 0,
      "stop": {"max_evaluations": 300, "max_seconds": null},
      "reference": null,
      "clock": "simulated",
      "workers": 1,
      "output_dir": null
    }

Only ``--seed``, ``--out`` and ``--workers`` can be overridden from the command line.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from monas import pareto
from monas.bench import BENCHMARKS, make_benchmark
from monas.optimizers import METHODS, Runner, RunHistory, Stop, make_params, run_method
from monas.bench.tiny_mlp import fc_space
from monas.space import build_cnn_space, config_key

SPACES = {"cnn": build_cnn_space, "tiny_mlp_fc": fc_space}
CURVE_POINTS = 100


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    benchmark: str
    method: str
    benchmark_params: dict = field(default_factory=dict)
    method_params: dict = field(default_factory=dict)
    seed: int = 0
    max_evaluations: int | None = None
    max_seconds: float | None = None
    reference: list[float] | None = None
    clock: str = "simulated"
    workers: int = 1
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            bench, method = d["benchmark"], d["method"]
        except KeyError as exc:
            raise ConfigError(f"config is missing the {exc.args[0]!r} section") from None
        if isinstance(bench, str):
            bench = {"name": bench}
        if isinstance(method, str):
            method = {"name": method}
        stop = d.get("stop") or {}
        cfg = cls(benchmark=bench.get("name"), method=method.get("name"),
                  benchmark_params=dict(bench.get("params") or {}),
                  method_params=dict(method.get("params") or {}),
                  seed=int(d.get("seed", 0)),
                  max_evaluations=stop.get("max_evaluations"), max_seconds=stop.get("max_seconds"),
                  reference=d.get("reference"), clock=d.get("clock", "simulated"),
                  workers=int(d.get("workers", 1)), output_dir=d.get("output_dir"))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(f"unknown benchmark {self.benchmark!r}; choose from {sorted(BENCHMARKS)}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {sorted(METHODS)}")
        if self.max_evaluations is None and self.max_seconds is None:
            raise ConfigError("the stop criterion needs max_evaluations and/or max_seconds")

    def to_dict(self) -> dict:
        return {
            "benchmark": {"name": self.benchmark, "params": self.benchmark_params},
            "method": {"name": self.method, "params": self.method_params},
            "seed": self.seed,
            "stop": {"max_evaluations": self.max_evaluations, "max_seconds": self.max_seconds},
            "reference": self.reference, "clock": self.clock, "workers": self.workers,
            "output_dir": self.output_dir,
        }


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(data)


def default_out_dir(cfg: ExperimentConfig) -> Path:
    root = Path(os.environ.get("MOBO_OUT", "runs"))
    return root / f"{cfg.benchmark}_{cfg.method}_seed{cfg.seed}"


# -- artifacts -----------------------------------------------------------------------

def _num(v: float) -> str:
    return repr(float(v))


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_history(path: Path, history: RunHistory) -> None:
    m = history.n_objectives
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eval_id", "budget", "wall_time_s", *[f"obj_{j}" for j in range(m)], "config_json", "meta_json"])
        for r in history.records:
            w.writerow([r.eval_id, _num(r.budget), _num(r.wall_time_s), *[_num(v) for v in r.objectives],
                        config_key(r.config), _dumps(r.meta)])


def read_history(path: Path) -> RunHistory:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        m = sum(1 for k in reader.fieldnames or [] if k.startswith("obj_"))
    h = RunHistory(m)
    for row in rows:
        h.append(json.loads(row["config_json"]), float(row["budget"]),
                 [float(row[f"obj_{j}"]) for j in range(m)], float(row["wall_time_s"]),
                 json.loads(row.get("meta_json") or "{}"))
    return h


def write_hypervolume(path: Path, history: RunHistory, ref) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["wall_time_s", "evaluations", "hypervolume"])
        for t, n, hv in history.hypervolume_curve(ref):
            w.writerow([_num(t), n, _num(hv)])


def pareto_payload(history: RunHistory) -> list[dict]:
    return [{"eval_id": r.eval_id, "budget": r.budget, "config": r.config, "objectives": list(r.objectives)}
            for r in history.pareto_records()]


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def execute(cfg: ExperimentConfig, out: Path) -> RunHistory:
    # the benchmark keeps its own seed (params, default 0); the run seed drives the optimizer
    bench = make_benchmark(cfg.benchmark, **cfg.benchmark_params)
    ref = np.asarray(cfg.reference if cfg.reference is not None else bench.reference, dtype=float)
    if ref.shape != (bench.n_objectives,):
        raise ConfigError(f"reference point needs {bench.n_objectives} entries")
    params = make_params(cfg.method, cfg.method_params)
    out.mkdir(parents=True, exist_ok=True)
    runner = Runner(bench, Stop(cfg.max_evaluations, cfg.max_seconds), workers=cfg.workers, clock=cfg.clock)
    history = run_method(cfg.method, runner, params, ref, seed=cfg.seed)

    write_history(out / "history.csv", history)
    write_hypervolume(out / "hypervolume.csv", history, ref)
    write_json(out / "pareto.json", pareto_payload(history))
    echo = cfg.to_dict()
    echo["output_dir"] = str(out)
    echo["resolved"] = {"reference": ref.tolist(), "benchmark": bench.describe(),
                        "method_params": _jsonable(asdict(params))}
    write_json(out / "config.json", echo)
    return history


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


# -- comparison ----------------------------------------------------------------------

@dataclass
class LoadedRun:
    path: Path
    method: str
    benchmark: str
    seed: int
    reference: list[float]
    curve: list[tuple[float, int, float]]
    front: list[dict]

    @property
    def final_hv(self) -> float:
        return self.curve[-1][2] if self.curve else 0.0


def load_run(path: Path) -> LoadedRun:
    try:
        cfg = json.loads((path / "config.json").read_text(encoding="utf-8"))
        with open(path / "hypervolume.csv", newline="", encoding="utf-8") as fh:
            curve = [(float(r["wall_time_s"]), int(r["evaluations"]), float(r["hypervolume"]))
                     for r in csv.DictReader(fh)]
        front = json.loads((path / "pareto.json").read_text(encoding="utf-8"))
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path} is not a complete run directory: {exc}") from None
    bench_id = _dumps({"name": cfg["benchmark"]["name"], "params": cfg["benchmark"].get("params", {})})
    return LoadedRun(path, cfg["method"]["name"], bench_id, int(cfg["seed"]),
                     cfg["resolved"]["reference"], curve, front)


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def _curve_at(curve, axis: int, x: float) -> float:
    val = 0.0
    for point in curve:
        if point[axis] <= x:
            val = point[2]
        else:
            break
    return val


def compare(run_dirs: Sequence[Path], out: Path) -> list[dict]:
    runs = [load_run(Path(p)) for p in run_dirs]
    if not runs:
        raise ConfigError("no runs given")
    if len({r.benchmark for r in runs}) > 1 or len({tuple(r.reference) for r in runs}) > 1:
        raise ConfigError("runs use different benchmarks or reference points")
    by_method: dict[str, list[LoadedRun]] = {}
    for r in runs:
        by_method.setdefault(r.method, []).append(r)

    summary = []
    for method, rs in by_method.items():
        mean, se = _mean_se([r.final_hv for r in rs])
        summary.append({"method": method, "mean_hypervolume": mean, "stderr": se, "n_seeds": len(rs)})
    summary.sort(key=lambda s: (-s["mean_hypervolume"], s["method"]))

    combined = {}
    for method, rs in by_method.items():
        pool = [dict(p, seed=r.seed) for r in rs for p in r.front]
        if pool:
            idx = pareto.pareto_front(np.array([p["objectives"] for p in pool]))
            pool = [pool[i] for i in idx]
        combined[method] = sorted(pool, key=lambda p: (p["objectives"], p["seed"], p["eval_id"]))

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "mean_hypervolume", "stderr", "n_seeds"])
        for s in summary:
            w.writerow([s["method"], _num(s["mean_hypervolume"]), _num(s["stderr"]), s["n_seeds"]])
    write_json(out / "combined_pareto.json", combined)

    max_evals = max((r.curve[-1][1] for r in runs if r.curve), default=0)
    max_time = max((r.curve[-1][0] for r in runs if r.curve), default=0.0)
    with open(out / "hv_curves.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis", "x", "method", "mean_hypervolume", "stderr", "n_seeds"])
        for method in sorted(by_method):
            rs = by_method[method]
            for n in range(1, max_evals + 1):
                mean, se = _mean_se([_curve_at(r.curve, 1, n) for r in rs])
                w.writerow(["evaluations", n, method, _num(mean), _num(se), len(rs)])
            for t in np.linspace(0.0, max_time, CURVE_POINTS + 1):
                mean, se = _mean_se([_curve_at(r.curve, 0, t) for r in rs])
                w.writerow(["wall_time_s", _num(t), method, _num(mean), _num(se), len(rs)])
    return summary


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one seeded experiment from a JSON config")
    run.add_argument("config", help="path to the experiment config (JSON)")
    run.add_argument("--seed", type=int, help="override the config's seed")
    run.add_argument("--out", help="output directory (default: config, then $MOBO_OUT/<name>)")
    run.add_argument("--workers", type=int, help="concurrent evaluations inside a batch")

    cmp_ = sub.add_parser("compare", help="aggregate finished runs into summary tables")
    cmp_.add_argument("run_dirs", nargs="+", help="run output directories")
    cmp_.add_argument("--out", required=True, help="directory for summary.csv and friends")

    spaces = sub.add_parser("spaces", help="search spaces")
    spaces.add_argument("action", choices=["list"])
    spaces.add_argument("--json", action="store_true", help="print full definitions")

    benches = sub.add_parser("benchmarks", help="benchmarks")
    benches.add_argument("action", choices=["list"])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
            if args.workers is not None:
                if args.workers < 1:
                    raise ConfigError("--workers must be at least 1")
                cfg.workers = args.workers
            out = Path(args.out) if args.out else Path(cfg.output_dir) if cfg.output_dir else default_out_dir(cfg)
            history = execute(cfg, out)
            print(f"{len(history)} evaluations written to {out}")
        elif args.command == "compare":
            for s in compare(args.run_dirs, Path(args.out)):
                print(f"{s['method']:<12} {s['mean_hypervolume']:.6g} +- {s['stderr']:.3g} (n={s['n_seeds']})")
        elif args.command == "spaces":
            for name, build in SPACES.items():
                space = build()
                if args.json:
                    print(json.dumps({name: json.loads(space.to_json())}, indent=2))
                else:
                    print(f"{name:<12} {space.dim:>3} parameters: {', '.join(space.names)}")
        elif args.command == "benchmarks":
            for name in BENCHMARKS:
                b = make_benchmark(name)
                cheap = ",".join(b.objective_names[i] for i in b.cheap_indices) or "-"
                print(f"{name:<14} objectives={','.join(b.objective_names)} cheap={cheap} dim={b.space.dim}")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
