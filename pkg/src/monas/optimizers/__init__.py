from monas.optimizers.base import Record, Runner, RunHistory, Stop, StopRun, random_unique
from monas.optimizers.bulkcut import BulkCutParams, paretsilon_greedy, run_bulkcut
from monas.optimizers.emoash import EmoashParams, run_emoash
from monas.optimizers.mobananas import MoBananasParams, run_mobananas
from monas.optimizers.mobohb import MobohbParams, run_mobohb
from monas.optimizers.msehvi import MsEhviParams, run_ehvi, run_msehvi
from monas.optimizers.random_search import RandomSearchParams, run_random_search

# name -> (run function, parameter dataclass)
METHODS = {
    "random": (run_random_search, RandomSearchParams),
    "emoash": (run_emoash, EmoashParams),
    "mobohb": (run_mobohb, MobohbParams),
    "msehvi": (run_msehvi, MsEhviParams),
    "ehvi": (run_ehvi, MsEhviParams),
    "mobananas": (run_mobananas, MoBananasParams),
    "bulkcut": (run_bulkcut, BulkCutParams),
}


def make_params(method: str, values: dict | None = None):
    try:
        _, cls = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None
    values = dict(values or {})
    if "hidden" in values:
        values["hidden"] = tuple(values["hidden"])
    return cls(**values)


def run_method(method: str, runner: Runner, params=None, ref=None, seed: int = 0) -> RunHistory:
    fn, _ = METHODS[method] if method in METHODS else (None, None)
    if fn is None:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    if params is None or isinstance(params, dict):
        params = make_params(method, params)
    return fn(runner, params, ref, seed)


__all__ = [
    "METHODS", "BulkCutParams", "EmoashParams", "MoBananasParams", "MobohbParams", "MsEhviParams",
    "RandomSearchParams", "Record", "RunHistory", "Runner", "Stop", "StopRun", "make_params",
    "paretsilon_greedy", "random_unique", "run_bulkcut", "run_ehvi", "run_emoash", "run_method",
    "run_mobananas", "run_mobohb", "run_msehvi", "run_random_search",
]
