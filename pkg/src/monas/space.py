"""Mixed conditional search spaces.

A space is an ordered list of parameters. Each parameter may depend on one
earlier parameter (its parent); it is *active* only when the parent is active
and the parent's value satisfies the condition. Configurations are plain dicts
holding exactly the active parameters.

Every configuration has a unit-cube encoding with one slot per parameter
(inactive slots encode to 0). Integer and continuous ranges map affinely
(in log space when ``log`` is set); categoricals map to ``index / (n - 1)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

Configuration = dict[str, Any]

KINDS = ("integer", "continuous", "categorical")
_SIG_DIGITS = 12


def _round_half_down(v: float) -> int:
    # nearest integer, ties toward the lower value
    return int(math.ceil(v - 0.5))


def _snap(v: float, scale: float) -> float:
    """Quantize a continuous value so encode/decode round trips are exact."""
    if v == 0.0:
        return 0.0
    mag = abs(v) if scale <= 0 else scale
    digits = _SIG_DIGITS - 1 - int(math.floor(math.log10(mag)))
    return float(round(v, digits))


@dataclass(frozen=True)
class Condition:
    parent: str
    op: str  # "equals" | "geq"
    value: Any

    def __post_init__(self) -> None:
        if self.op not in ("equals", "geq"):
            raise ValueError(f"unknown condition operator {self.op!r}")

    def holds(self, parent_value: Any) -> bool:
        if self.op == "equals":
            return parent_value == self.value
        return parent_value >= self.value


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    lo: float | None = None
    hi: float | None = None
    values: tuple = ()
    log: bool = False
    condition: Condition | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.values:
                raise ValueError(f"{self.name}: categorical needs at least one value")
            try:
                ordered = tuple(sorted(self.values))
            except TypeError:
                ordered = tuple(self.values)
            object.__setattr__(self, "values", ordered)
            if self.log:
                raise ValueError(f"{self.name}: log scale is meaningless for categoricals")
            return
        if self.lo is None or self.hi is None or not self.lo < self.hi:
            raise ValueError(f"{self.name}: need lo < hi, got [{self.lo}, {self.hi}]")
        if self.log and self.lo <= 0:
            raise ValueError(f"{self.name}: log scale requires lo > 0")
        if self.kind == "integer" and (int(self.lo) != self.lo or int(self.hi) != self.hi):
            raise ValueError(f"{self.name}: integer bounds must be integral")
        # transformed bounds, cached because encode/decode sit in hot loops
        object.__setattr__(self, "_tlo", self._t(self.lo))
        object.__setattr__(self, "_thi", self._t(self.hi))

    # -- transforms ---------------------------------------------------------
    def _t(self, v: float) -> float:
        return math.log(v) if self.log else float(v)

    def _t_inv(self, u: float) -> float:
        return math.exp(u) if self.log else u

    def sample(self, rng: np.random.Generator) -> Any:
        if self.kind == "categorical":
            return self.values[int(rng.integers(len(self.values)))]
        if self.kind == "integer" and not self.log:
            return int(rng.integers(int(self.lo), int(self.hi) + 1))
        u = rng.uniform(self._t(self.lo), self._t(self.hi))
        return self._finish(self._t_inv(u))

    def _finish(self, v: float) -> Any:
        """Map a real value in the original domain onto the nearest valid value."""
        if self.kind == "integer":
            return int(min(max(_round_half_down(v), self.lo), self.hi))
        scale = 0.0 if self.log else max(abs(self.lo), abs(self.hi))
        return float(min(max(_snap(v, scale), self.lo), self.hi))

    def encode(self, value: Any) -> float:
        if self.kind == "categorical":
            if len(self.values) == 1:
                return 0.0
            return self.values.index(value) / (len(self.values) - 1)
        lo, hi = self._tlo, self._thi
        x = (self._t(value) - lo) / (hi - lo)
        return min(max(x, 0.0), 1.0)

    def decode(self, x: float) -> Any:
        if self.kind == "categorical":
            n = len(self.values)
            return self.values[min(max(_round_half_down(x * (n - 1)), 0), n - 1)]
        lo, hi = self._tlo, self._thi
        return self._finish(self._t_inv(lo + x * (hi - lo)))

    def contains(self, value: Any) -> bool:
        if self.kind == "categorical":
            return value in self.values
        if self.kind == "integer" and (isinstance(value, bool) or int(value) != value):
            return False
        return self.lo <= value <= self.hi

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        d: dict[str, Any] = {"name": self.name, "kind": self.kind}
        if self.kind == "categorical":
            d["values"] = list(self.values)
        else:
            d["range"] = [self.lo, self.hi]
        d["log"] = self.log
        if self.condition is not None:
            d["condition"] = {"parent": self.condition.parent, self.condition.op: self.condition.value}
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ParamSpec":
        cond = None
        if d.get("condition"):
            c = d["condition"]
            op = "equals" if "equals" in c else "geq"
            cond = Condition(c["parent"], op, c[op])
        if d["kind"] == "categorical":
            return cls(d["name"], "categorical", values=tuple(d["values"]), condition=cond)
        lo, hi = d["range"]
        if d["kind"] == "integer":
            lo, hi = int(lo), int(hi)
        return cls(d["name"], d["kind"], lo, hi, log=bool(d.get("log", False)), condition=cond)


@dataclass(frozen=True)
class SearchSpace:
    params: tuple[ParamSpec, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        index: dict[str, int] = {}
        for i, p in enumerate(self.params):
            if p.name in index:
                raise ValueError(f"duplicate parameter name {p.name!r}")
            if p.condition is not None and p.condition.parent not in index:
                raise ValueError(f"{p.name}: parent {p.condition.parent!r} must be declared earlier")
            index[p.name] = i
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return len(self.params)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def __getitem__(self, name: str) -> ParamSpec:
        return self.params[self._index[name]]

    def index(self, name: str) -> int:
        return self._index[name]

    def is_active(self, p: ParamSpec, values: Mapping[str, Any]) -> bool:
        c = p.condition
        return c is None or (c.parent in values and c.holds(values[c.parent]))

    def active_names(self, config: Mapping[str, Any]) -> list[str]:
        return [p.name for p in self.params if self.is_active(p, config)]

    def validate(self, config: Mapping[str, Any]) -> None:
        """Raise ``ValueError`` unless ``config`` holds exactly the active parameters, in range."""
        seen: dict[str, Any] = {}
        for p in self.params:
            if self.is_active(p, seen):
                if p.name not in config:
                    raise ValueError(f"active parameter {p.name!r} missing")
                if not p.contains(config[p.name]):
                    raise ValueError(f"{p.name}={config[p.name]!r} outside its domain")
                seen[p.name] = config[p.name]
            elif p.name in config:
                raise ValueError(f"inactive parameter {p.name!r} is set")
        extra = set(config) - set(self._index)
        if extra:
            raise ValueError(f"unknown parameters {sorted(extra)}")

    def repair(self, values: Mapping[str, Any], rng: np.random.Generator) -> Configuration:
        """Drop inactive entries and sample any active parameter that has no value."""
        out: Configuration = {}
        for p in self.params:
            if not self.is_active(p, out):
                continue
            out[p.name] = values[p.name] if p.name in values else p.sample(rng)
        return out

    def to_json(self) -> str:
        return json.dumps([p.to_dict() for p in self.params], indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SearchSpace":
        return cls(tuple(ParamSpec.from_dict(d) for d in json.loads(text)))

    @classmethod
    def load(cls, path: str | Path) -> "SearchSpace":
        return cls.from_json(Path(path).read_text())


def build_cnn_space() -> SearchSpace:
    """The joint architecture + training space used for the CNN experiments (15 slots)."""
    text = resources.files("monas").joinpath("data/cnn_space.json").read_text()
    return SearchSpace.from_json(text)


def layered_params(prefix: str, count_name: str, n: int, lo: float, hi: float,
                   kind: str = "integer", log: bool = True) -> list[ParamSpec]:
    """Per-layer slots ``prefix_1..prefix_n``; slot i is active iff ``count_name >= i``."""
    out = []
    for i in range(1, n + 1):
        cond = None if i == 1 else Condition(count_name, "geq", i)
        out.append(ParamSpec(f"{prefix}_{i}", kind, lo, hi, log=log, condition=cond))
    return out


def sample_uniform(space: SearchSpace, rng: np.random.Generator) -> Configuration:
    config: Configuration = {}
    for p in space.params:
        if space.is_active(p, config):
            config[p.name] = p.sample(rng)
    return config


def sample_unit(space: SearchSpace, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` unit-cube points whose decodings are uniform draws from every domain.

    Discrete slots are placed exactly on their grid points, since the grid's end
    points only own half-width cells.
    """
    X = rng.random((n, space.dim))
    for j, p in enumerate(space.params):
        if p.kind == "categorical":
            k = len(p.values)
            X[:, j] = rng.integers(k, size=n) / max(k - 1, 1)
        elif p.kind == "integer" and not p.log:
            X[:, j] = (rng.integers(int(p.lo), int(p.hi) + 1, size=n) - p.lo) / (p.hi - p.lo)
    return X


def encode(space: SearchSpace, config: Mapping[str, Any]) -> np.ndarray:
    x = np.zeros(space.dim)
    for i, p in enumerate(space.params):
        if p.name in config:
            x[i] = p.encode(config[p.name])
    return x


def encode_many(space: SearchSpace, configs: Iterable[Mapping[str, Any]]) -> np.ndarray:
    rows = [encode(space, c) for c in configs]
    return np.array(rows).reshape(len(rows), space.dim)


def decode(space: SearchSpace, x: Sequence[float]) -> Configuration:
    x = np.asarray(x, dtype=float)
    if x.shape != (space.dim,):
        raise ValueError(f"expected a vector of length {space.dim}, got shape {x.shape}")
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise ValueError("unit-cube coordinates must lie in [0, 1]")
    config: Configuration = {}
    for i, p in enumerate(space.params):
        if space.is_active(p, config):
            config[p.name] = p.decode(float(x[i]))
    return config


def mutate_k(space: SearchSpace, parent: Mapping[str, Any], k: int,
             rng: np.random.Generator) -> Configuration:
    """Resample ``k`` distinct active parameters, then restore conditional consistency."""
    child = dict(parent)
    active = space.active_names(parent)
    k = min(k, len(active))
    if k <= 0:
        return child
    for j in sorted(rng.choice(len(active), size=k, replace=False)):
        name = active[j]
        child[name] = space[name].sample(rng)
    return space.repair(child, rng)


def recombine(space: SearchSpace, a: Mapping[str, Any], b: Mapping[str, Any],
              rng: np.random.Generator) -> Configuration:
    """Uniform crossover: each slot comes from ``a`` or ``b`` with probability 1/2.

    A slot whose chosen parent lacks a value (it was inactive there) is sampled fresh.
    """
    from_a = rng.random(space.dim) < 0.5
    child: Configuration = {}
    for i, p in enumerate(space.params):
        if not space.is_active(p, child):
            continue
        src = a if from_a[i] else b
        child[p.name] = src[p.name] if p.name in src else p.sample(rng)
    return child


def gaussian_perturb(space: SearchSpace, parent: Mapping[str, Any], sigma: float,
                     rng: np.random.Generator) -> Configuration:
    x = encode(space, parent) + rng.normal(0.0, sigma, size=space.dim)
    return decode(space, np.clip(x, 0.0, 1.0))


def config_key(config: Mapping[str, Any]) -> str:
    """Canonical string form, used for deduplication and serialization."""
    return json.dumps(config, sort_keys=True, separators=(",", ":"))
