"""Analytic stand-in for CNN training over the joint architecture + training space.

Objective 0 is the exact parameter count of the described CNN (log10), which
needs no training. Objective 1 is a smooth synthetic validation error:

    S = capacity(lp) + lr_term + batch_term + bn_term + kernel_term + c / budget
    error = e_min + (1 - e_min) * (1 - exp(-S))

with ``lp = log10(params)``,

    capacity(lp) = 0.9 * exp(-1.2 * (lp - 3)) + 0.02 * (lp - lp_star)**2
    lr_term      = 0.12 * (log10(lr) - (lr_star + 0.3 * (depth - 3)))**2
    batch_term   = 0.0125 * (log2(batch_size) - bs_star)**2
    bn_term      = 0.05 if batch norm is off, else 0
    kernel_term  = 0.005 * mean_i (kernel_size_i - 5)**2

where ``depth`` counts conv plus FC layers. The optima ``lp_star`` (6.0),
``lr_star`` (-3.0) and ``bs_star`` (6.0) are shifted by small Gaussian
offsets drawn from the benchmark seed; seed 0 uses the unshifted values.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from importlib import resources
from typing import Any, Mapping

import numpy as np

from monas import pareto
from monas.bench.base import KEEP_FRACTIONS, Benchmark
from monas.space import SearchSpace, build_cnn_space, config_key, sample_uniform

INPUT_SHAPE = (16, 16, 3)
N_CLASSES = 17
E_MIN = 0.05
FIDELITY_C = 0.8

ARCHITECTURE = (
    "num_conv_layers", "num_filters_1", "num_filters_2", "num_filters_3",
    "kernel_size_1", "kernel_size_2", "kernel_size_3", "batch_norm", "global_avg_pool",
    "num_fc_layers", "num_neurons_1", "num_neurons_2", "num_neurons_3",
)


def _layers(config: Mapping[str, Any], prefix: str, count: str) -> list[int]:
    return [int(config[f"{prefix}_{i}"]) for i in range(1, int(config[count]) + 1)]


def cnn_param_count(config: Mapping[str, Any], input_shape=INPUT_SHAPE, n_classes: int = N_CLASSES) -> int:
    """Exact parameter count of the conv -> pool -> ... -> FC -> classifier network.

    Convolutions use same padding; each is followed by a 2x2 stride-2 max-pool.
    Batch norm adds a scale and shift per channel.
    """
    h, w, c_in = input_shape
    total = 0
    filters = _layers(config, "num_filters", "num_conv_layers")
    kernels = _layers(config, "kernel_size", "num_conv_layers")
    bn = bool(config["batch_norm"])
    for i, (c_out, k) in enumerate(zip(filters, kernels)):
        total += k * k * c_in * c_out + c_out + (2 * c_out if bn else 0)
        h, w = h // 2, w // 2
        if h == 0 or w == 0:
            raise ValueError(f"spatial size collapses to 0 after conv layer {i + 1} "
                             f"(input {input_shape}, {len(filters)} pooled conv layers)")
        c_in = c_out
    n_in = c_in if config["global_avg_pool"] else h * w * c_in
    for n_out in _layers(config, "num_neurons", "num_fc_layers"):
        total += n_in * n_out + n_out
        n_in = n_out
    return total + n_in * n_classes + n_classes


def max_param_count(space: SearchSpace, input_shape=INPUT_SHAPE, n_classes: int = N_CLASSES) -> int:
    """Largest count over the space; counts grow with every width, so only layer counts
    and the pooling switch need enumerating."""
    best = 0
    for n_conv, n_fc, gap in itertools.product((1, 2, 3), (1, 2, 3), (False, True)):
        config = {"num_conv_layers": n_conv, "num_fc_layers": n_fc, "global_avg_pool": gap,
                  "batch_norm": True}
        for i in range(1, n_conv + 1):
            config[f"num_filters_{i}"] = space[f"num_filters_{i}"].hi
            config[f"kernel_size_{i}"] = max(space[f"kernel_size_{i}"].values)
        for i in range(1, n_fc + 1):
            config[f"num_neurons_{i}"] = space[f"num_neurons_{i}"].hi
        try:
            best = max(best, cnn_param_count(config, input_shape, n_classes))
        except ValueError:
            continue
    return best


class NasHpoProxy(Benchmark):
    name = "nas_hpo_proxy"
    objective_names = ("log10_params", "error")
    transforms = ("log10", None)
    cheap_indices = (0,)
    architecture = ARCHITECTURE

    def __init__(self, seed: int = 0, input_shape=INPUT_SHAPE, n_classes: int = N_CLASSES, reference=None):
        space = build_cnn_space()
        self.input_shape = tuple(input_shape)
        self.n_classes = n_classes
        if reference is None:
            reference = (1.1 * math.log10(max_param_count(space, input_shape, n_classes)), 1.1)
        super().__init__(space, reference, seed)
        shift = np.zeros(3) if seed == 0 else np.random.default_rng(seed).normal(0.0, [0.3, 0.3, 0.5])
        self.lp_star, self.lr_star, self.bs_star = 6.0 + shift[0], -3.0 + shift[1], 6.0 + shift[2]

    def param_count(self, config: Mapping[str, Any]) -> int:
        return cnn_param_count(config, self.input_shape, self.n_classes)

    def cheap(self, config):
        return np.array([math.log10(self.param_count(config))])

    def error(self, config: Mapping[str, Any], budget: float) -> float:
        if budget <= 0:
            return 1.0
        lp = math.log10(self.param_count(config))
        depth = int(config["num_conv_layers"]) + int(config["num_fc_layers"])
        kernels = _layers(config, "kernel_size", "num_conv_layers")
        s = (0.9 * math.exp(-1.2 * (lp - 3.0)) + 0.02 * (lp - self.lp_star) ** 2
             + 0.12 * (math.log10(config["learning_rate"]) - (self.lr_star + 0.3 * (depth - 3))) ** 2
             + 0.0125 * (math.log2(config["batch_size"]) - self.bs_star) ** 2
             + (0.0 if config["batch_norm"] else 0.05)
             + 0.005 * float(np.mean([(k - 5) ** 2 for k in kernels]))
             + FIDELITY_C / budget)
        return E_MIN + (1.0 - E_MIN) * (1.0 - math.exp(-s))

    def evaluate(self, config, budget):
        return np.array([self.cheap(config)[0], self.error(config, budget)])

    def cost(self, config, budget):
        return float(budget) * (1.0 + self.param_count(config) / 1e5)

    # -- grow / shrink on the configuration level --------------------------------
    def bulk_up(self, config, state, rng):
        arch = self.split(config)[0]
        base = self.param_count(config)
        options = []
        n_fc, n_conv = int(arch["num_fc_layers"]), int(arch["num_conv_layers"])
        if n_fc < 3:
            for p in range(1, n_fc + 1):
                widths = _layers(arch, "num_neurons", "num_fc_layers")
                widths.insert(p, widths[p - 1])
                child = {k: v for k, v in arch.items() if not k.startswith("num_neurons")}
                child["num_fc_layers"] = n_fc + 1
                child.update({f"num_neurons_{i + 1}": w for i, w in enumerate(widths)})
                options.append(child)
        if n_conv < 3:
            for p in range(1, n_conv + 1):
                filters = _layers(arch, "num_filters", "num_conv_layers")
                kernels = _layers(arch, "kernel_size", "num_conv_layers")
                filters.insert(p, filters[p - 1])
                kernels.insert(p, kernels[p - 1])
                child = {k: v for k, v in arch.items()
                         if not k.startswith(("num_filters", "kernel_size"))}
                child["num_conv_layers"] = n_conv + 1
                child.update({f"num_filters_{i + 1}": f for i, f in enumerate(filters)})
                child.update({f"kernel_size_{i + 1}": k for i, k in enumerate(kernels)})
                options.append(child)
        if not arch["batch_norm"]:
            # batch norm initialized to undo its own normalization is function preserving
            options.append({**arch, "batch_norm": True})
        options = [c for c in options if self._count_arch(c, config) > base]
        if not options:
            return None
        return options[int(rng.integers(len(options)))], None

    def cut_down(self, config, state, rng):
        """Prune every layer that can shrink, each by its own keep fraction."""
        arch = dict(self.split(config)[0])
        changed = False
        for prefix, count in (("num_neurons", "num_fc_layers"), ("num_filters", "num_conv_layers")):
            for i in range(1, int(arch[count]) + 1):
                name = f"{prefix}_{i}"
                lo = int(self.space[name].lo)
                w = int(arch[name])
                if w <= lo:
                    continue
                kf = KEEP_FRACTIONS[int(rng.integers(len(KEEP_FRACTIONS)))]
                arch[name] = min(max(lo, int(round(kf * w))), w - 1)
                changed = True
        return (arch, None) if changed else None

    def _count_arch(self, arch, config) -> int:
        return self.param_count({**self.split(config)[1], **arch})


# -- brute-force front fixture -----------------------------------------------------

FRONT_FIXTURE = "data/proxy_front.csv"


def sweep_front(n_samples: int = 100_000, seed: int = 0, benchmark: NasHpoProxy | None = None):
    """Non-dominated set of a uniform random sweep at full budget, sorted by objective 0."""
    bench = benchmark or NasHpoProxy()
    rng = np.random.default_rng(seed)
    configs = [sample_uniform(bench.space, rng) for _ in range(n_samples)]
    Y = np.array([bench.evaluate(c, bench.b_max) for c in configs])
    idx = pareto.pareto_front(Y)
    idx = sorted(idx, key=lambda i: (Y[i, 0], Y[i, 1], config_key(configs[i])))
    return [(float(Y[i, 0]), float(Y[i, 1]), configs[i]) for i in idx]


def front_to_csv(front) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["obj_0", "obj_1", "config_json"])
    for y0, y1, config in front:
        writer.writerow([repr(y0), repr(y1), config_key(config)])
    return buf.getvalue()


def load_front_fixture():
    text = resources.files("monas").joinpath(FRONT_FIXTURE).read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    return [(float(r["obj_0"]), float(r["obj_1"]), json.loads(r["config_json"])) for r in rows]
