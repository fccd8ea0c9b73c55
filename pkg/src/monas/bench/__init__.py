from monas.bench.base import Benchmark, stable_rng
from monas.bench.proxy import NasHpoProxy, cnn_param_count, load_front_fixture, sweep_front
from monas.bench.synthetic import DTLZ2, ZDT1, dtlz2, zdt1
from monas.bench.tiny_mlp import TinyMLP, gaussian_mixture

BENCHMARKS = {
    "zdt1": ZDT1,
    "dtlz2": DTLZ2,
    "nas_hpo_proxy": NasHpoProxy,
    "tiny_mlp": TinyMLP,
}


def make_benchmark(name: str, seed: int = 0, **params) -> Benchmark:
    try:
        cls = BENCHMARKS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None
    return cls(seed=seed, **params)


__all__ = [
    "BENCHMARKS", "Benchmark", "DTLZ2", "NasHpoProxy", "TinyMLP", "ZDT1",
    "cnn_param_count", "dtlz2", "gaussian_mixture", "load_front_fixture", "make_benchmark",
    "stable_rng", "sweep_front", "zdt1",
]
