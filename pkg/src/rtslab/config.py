"""YAML configuration documents for single runs and experiment grids.

Parsing is fail-closed: unknown or duplicate keys are rejected and every
error names the key and its line.
"""

from __future__ import annotations

import yaml

from .core import DistanceKind, FitnessKind
from .engine import AlgorithmConfig, AlgorithmKind, ConfigError, SelectionPolicy, StopCriteria
from .experiments import W_EQUALS_MU, BudgetFormula, ExperimentSpec, Protocol

ALGORITHMS = {"plain": AlgorithmKind.PLAIN, "rts": AlgorithmKind.RTS,
              "det_crowding": AlgorithmKind.DET_CROWDING}
POLICIES = {"with_replacement": SelectionPolicy.WITH_REPLACEMENT,
            "without_replacement": SelectionPolicy.WITHOUT_REPLACEMENT}
DISTANCES = {"genotypic": DistanceKind.GENOTYPIC, "phenotypic": DistanceKind.PHENOTYPIC}
FITNESSES = {"twomax": FitnessKind.TWOMAX, "onemax": FitnessKind.ONEMAX,
             "zeromax": FitnessKind.ZEROMAX}
BUDGETS = {f.value: f for f in BudgetFormula}
PROTOCOLS = {p.value: p for p in Protocol}


def name_of(table: dict, value) -> str:
    for k, v in table.items():
        if v == value:
            return k
    raise KeyError(value)


RUN_KEYS = {"n", "mu", "w", "algorithm", "policy", "distance", "fitness", "stop"}
RUN_REQUIRED = {"n", "mu", "w", "algorithm", "stop"}
STOP_KEYS = {"require_both_optima", "budget", "stagnation_collapse", "stagnation_w_minus_1"}
GRID_KEYS = {"protocol", "n", "mu", "w", "algorithm", "policy", "distance", "fitness",
             "runs", "budget"}
GRID_REQUIRED = {"protocol", "n", "mu", "w", "algorithm", "budget"}


class Document:
    """A parsed mapping plus the source line of every key."""

    def __init__(self, text: str, source: str = "<config>"):
        self.source = source
        try:
            node = yaml.compose(text)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f" line {mark.line + 1}" if mark is not None else ""
            raise ConfigError(f"{source}:{where}: cannot parse: {exc}") from None
        if not isinstance(self.data, dict):
            raise ConfigError(f"{source}: expected a mapping at top level")
        self.lines: dict[str, int] = {}
        self._index(node, "")

    @classmethod
    def from_path(cls, path) -> "Document":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls(fh.read(), str(path))
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None

    def _index(self, node, prefix):
        if not isinstance(node, yaml.MappingNode):
            return
        for key_node, value_node in node.value:
            key = prefix + str(key_node.value)
            if key in self.lines:
                raise ConfigError(f"{self.source}: line {key_node.start_mark.line + 1}: "
                                  f"duplicate key '{key}'")
            self.lines[key] = key_node.start_mark.line + 1
            self._index(value_node, key + ".")

    def error(self, key: str, message: str) -> ConfigError:
        line = self.lines.get(key)
        where = f"line {line}: " if line else ""
        return ConfigError(f"{self.source}: {where}key '{key}': {message}")

    def check_keys(self, mapping: dict, allowed: set, required: set, prefix: str = ""):
        for key in mapping:
            if key not in allowed:
                raise self.error(prefix + str(key), "unknown key")
        for key in sorted(required - set(mapping)):
            raise ConfigError(f"{self.source}: missing required key '{prefix + key}'")


def _int(doc: Document, key: str, value, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise doc.error(key, f"expected an integer, got {value!r}")
    if value < minimum:
        raise doc.error(key, f"must be at least {minimum}, got {value}")
    return value


def _bool(doc: Document, key: str, value) -> bool:
    if not isinstance(value, bool):
        raise doc.error(key, f"expected true or false, got {value!r}")
    return value


def _choice(doc: Document, key: str, value, table: dict):
    if value not in table:
        raise doc.error(key, f"expected one of {', '.join(table)}, got {value!r}")
    return table[value]


def _common(doc: Document, data: dict) -> dict:
    return dict(
        policy=_choice(doc, "policy", data.get("policy", "with_replacement"), POLICIES),
        distance=_choice(doc, "distance", data.get("distance", "genotypic"), DISTANCES),
        fitness=_choice(doc, "fitness", data.get("fitness", "twomax"), FITNESSES),
    )


def parse_run_config(doc: Document) -> AlgorithmConfig:
    data = doc.data
    doc.check_keys(data, RUN_KEYS, RUN_REQUIRED)
    stop = data["stop"]
    if not isinstance(stop, dict):
        raise doc.error("stop", "expected a mapping")
    doc.check_keys(stop, STOP_KEYS, STOP_KEYS, "stop.")
    limit = stop["budget"]
    if limit is not None:
        limit = _int(doc, "stop.budget", limit, minimum=0)
    try:
        criteria = StopCriteria(
            require_both_optima=_bool(doc, "stop.require_both_optima", stop["require_both_optima"]),
            budget=limit,
            stagnation_collapse=_bool(doc, "stop.stagnation_collapse", stop["stagnation_collapse"]),
            stagnation_w_minus_1=_bool(doc, "stop.stagnation_w_minus_1",
                                       stop["stagnation_w_minus_1"]))
    except ConfigError as exc:
        raise doc.error("stop", str(exc)) from None
    return AlgorithmConfig(
        n=_int(doc, "n", data["n"]), mu=_int(doc, "mu", data["mu"]), w=_int(doc, "w", data["w"]),
        kind=_choice(doc, "algorithm", data["algorithm"], ALGORITHMS), stop=criteria,
        **_common(doc, data))


def _list(doc: Document, key: str, value) -> list:
    if not isinstance(value, list):
        value = [value]
    if not value:
        raise doc.error(key, "must not be empty")
    return value


def parse_grid_spec(doc: Document, master_seed: int) -> ExperimentSpec:
    data = doc.data
    doc.check_keys(data, GRID_KEYS, GRID_REQUIRED)
    mu_list = [_int(doc, "mu", v) for v in _list(doc, "mu", data["mu"])]
    w_list = []
    for v in _list(doc, "w", data["w"]):
        w_list.append(W_EQUALS_MU if v == W_EQUALS_MU else _int(doc, "w", v))
    try:
        return ExperimentSpec(
            protocol=_choice(doc, "protocol", data["protocol"], PROTOCOLS),
            n=_int(doc, "n", data["n"]), mu_list=tuple(mu_list), w_list=tuple(w_list),
            runs=_int(doc, "runs", data.get("runs", 100)), master_seed=master_seed,
            budget=_choice(doc, "budget", data["budget"], BUDGETS),
            algorithm=_choice(doc, "algorithm", data["algorithm"], ALGORITHMS),
            **_common(doc, data))
    except ConfigError as exc:
        if str(exc).startswith(doc.source):
            raise
        raise ConfigError(f"{doc.source}: {exc}") from None
