"""Parameter grids over (mu, w): success rates under a time budget, runtime
growth without a budget, and takeover measurement."""

from __future__ import annotations

import enum
import logging
import math
import os
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .core import DistanceKind, FitnessKind, mix64
from .engine import (AlgorithmConfig, AlgorithmKind, ConfigError, InvariantViolation,
                     RunResult, SelectionPolicy, Status, StopCriteria, run)

log = logging.getLogger(__name__)

COST_WARNING_GENERATIONS = 10**8
W_EQUALS_MU = "mu"


class BudgetFormula(enum.Enum):
    STANDARD = "standard"
    ENHANCED = "enhanced"
    UNBOUNDED = "unbounded"


class Protocol(enum.Enum):
    SUCCESS_RATE = "success_rate"
    RUNTIME_GROWTH = "runtime_growth"
    TAKEOVER = "takeover"


def budget(formula: BudgetFormula, mu: int, w: int, n: int) -> int | None:
    """Generation limit: ``ceil(10 mu n ln n)`` for the standard budget,
    ``ceil(100 max(1, mu/w) mu n ln n)`` for the enhanced one."""
    if mu < 1 or n < 1 or w < 1:
        raise ConfigError("mu, w and n must be positive")
    formula = BudgetFormula(formula)
    if formula == BudgetFormula.UNBOUNDED:
        return None
    if formula == BudgetFormula.STANDARD:
        return math.ceil(10 * mu * n * math.log(n))
    return math.ceil(100 * max(1.0, mu / w) * mu * n * math.log(n))


def derive_seed(master: int, cell_index: int, run_index: int) -> int:
    """64-bit seed for one run of one cell.

    Both indices are mixed first; the finalizer is a bijection, so distinct
    index pairs under one master give distinct seeds whenever the mixed
    indices differ.
    """
    idx = mix64(mix64(cell_index + 0x632BE59BD9B4E019) ^ (run_index * 0x9E3779B97F4A7C15))
    return mix64(master ^ idx)


@dataclass(frozen=True)
class ExperimentSpec:
    protocol: Protocol
    n: int
    mu_list: tuple[int, ...]
    w_list: tuple  # ints, or W_EQUALS_MU for w = mu in every row
    policy: SelectionPolicy = SelectionPolicy.WITH_REPLACEMENT
    distance: DistanceKind = DistanceKind.GENOTYPIC
    fitness: FitnessKind = FitnessKind.TWOMAX
    runs: int = 100
    master_seed: int = 0
    budget: BudgetFormula = BudgetFormula.STANDARD
    algorithm: AlgorithmKind = AlgorithmKind.RTS

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        object.__setattr__(self, "budget", BudgetFormula(self.budget))
        object.__setattr__(self, "policy", SelectionPolicy(self.policy))
        object.__setattr__(self, "distance", DistanceKind(self.distance))
        object.__setattr__(self, "fitness", FitnessKind(self.fitness))
        object.__setattr__(self, "algorithm", AlgorithmKind(self.algorithm))
        object.__setattr__(self, "mu_list", tuple(self.mu_list))
        object.__setattr__(self, "w_list", tuple(self.w_list))
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if not self.mu_list or not self.w_list:
            raise ConfigError("mu and w lists must be nonempty")
        if self.n < 1:
            raise ConfigError("n must be positive")
        for mu in self.mu_list:
            if not isinstance(mu, int) or mu < 1:
                raise ConfigError(f"invalid mu {mu!r}")
        for w in self.w_list:
            if w != W_EQUALS_MU and (not isinstance(w, int) or w < 1):
                raise ConfigError(f"invalid w {w!r}")
        if self.protocol == Protocol.SUCCESS_RATE and self.budget == BudgetFormula.UNBOUNDED:
            raise ConfigError("the success-rate protocol needs a finite budget")

    def cells(self) -> list["Cell"]:
        """Grid cells in spec order; the position is the seeding index."""
        out = []
        for mu in self.mu_list:
            for w in self.w_list:
                out.append(Cell(len(out), mu, mu if w == W_EQUALS_MU else w))
        return out

    def config_for(self, cell: "Cell") -> AlgorithmConfig:
        return AlgorithmConfig(n=self.n, mu=cell.mu, w=cell.w, kind=self.algorithm,
                               policy=self.policy, distance=self.distance,
                               fitness=self.fitness, stop=self.stop_for(cell))

    def stop_for(self, cell: "Cell") -> StopCriteria:
        if self.protocol == Protocol.SUCCESS_RATE:
            return StopCriteria(budget=budget(self.budget, cell.mu, cell.w, self.n))
        limit = None if self.budget == BudgetFormula.UNBOUNDED else budget(
            self.budget, cell.mu, cell.w, self.n)
        # without replacement and w >= 2 a full collapse can never happen, so
        # both non-budget protocols also stop at the (w-1)-stagnation state
        without = self.policy == SelectionPolicy.WITHOUT_REPLACEMENT
        return StopCriteria(budget=limit, stagnation_collapse=True,
                            stagnation_w_minus_1=without and self.algorithm == AlgorithmKind.RTS)


@dataclass(frozen=True)
class Cell:
    index: int
    mu: int
    w: int


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    seed: int
    result: RunResult


@dataclass
class CellResult:
    cell: Cell
    runs: int
    records: list[RunRecord] = field(default_factory=list)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def mu(self) -> int:
        return self.cell.mu

    @property
    def w(self) -> int:
        return self.cell.w

    @property
    def success_count(self) -> int:
        return sum(r.result.status == Status.SUCCESS for r in self.records)

    @property
    def lone_count(self) -> int:
        return sum(r.result.lone_occurred for r in self.records)

    @property
    def mean_generations(self) -> float:
        return statistics.fmean(r.result.generations for r in self.records)

    @property
    def std_generations(self) -> float:
        return _sample_std([r.result.generations for r in self.records])

    @property
    def mean_min_branch_best(self) -> float:
        return statistics.fmean(r.result.min_branch_best for r in self.records)

    @property
    def std_min_branch_best(self) -> float:
        return _sample_std([r.result.min_branch_best for r in self.records])


def _sample_std(values) -> float:
    return statistics.stdev(values) if len(values) > 1 else math.nan


def _run_chunk(config: AlgorithmConfig, jobs):
    return [RunRecord(i, seed, run(config, seed)) for i, seed in jobs]


def default_parallelism() -> int:
    env = os.environ.get("RTSLAB_PARALLEL")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _cost_check(spec: ExperimentSpec, cell: Cell) -> None:
    limit = spec.stop_for(cell).budget
    if limit is not None and limit * spec.runs > COST_WARNING_GENERATIONS:
        msg = (f"cell mu={cell.mu}, w={cell.w} may need up to {limit * spec.runs:.3g} "
               "generations")
        log.warning(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def run_cell(spec: ExperimentSpec, cell: Cell, master_seed: int | None = None,
             parallel: int = 1, seeds=None, pool=None) -> CellResult:
    """All runs of one cell. A run that breaks a runtime invariant fails the
    whole cell; the error is recorded and no records are kept.

    ``seeds`` overrides the derived per-run seeds (used to force degenerate
    aggregates in tests). ``pool`` is an executor to reuse across cells.
    """
    master = spec.master_seed if master_seed is None else master_seed
    config = spec.config_for(cell)
    if seeds is None:
        seeds = [derive_seed(master, cell.index, r) for r in range(spec.runs)]
    jobs = list(enumerate(seeds))
    _cost_check(spec, cell)
    result = CellResult(cell, len(jobs))
    try:
        if pool is None and (parallel <= 1 or len(jobs) < 2):
            result.records = _run_chunk(config, jobs)
        elif pool is None:
            with ProcessPoolExecutor(parallel) as own:
                result.records = _run_parallel(own, parallel, config, jobs)
        else:
            result.records = _run_parallel(pool, parallel, config, jobs)
    except InvariantViolation as exc:
        log.error("cell mu=%d w=%d failed: %s", cell.mu, cell.w, exc)
        result.records = []
        result.error = str(exc)
    return result


def _run_parallel(pool, parallel, config, jobs):
    chunks = [jobs[i::parallel] for i in range(parallel) if jobs[i::parallel]]
    parts = pool.map(_run_chunk, [config] * len(chunks), chunks)
    records = [r for part in parts for r in part]
    return sorted(records, key=lambda r: r.run_index)


@dataclass
class Report:
    spec: ExperimentSpec
    cells: list[CellResult]

    @property
    def failed_cells(self) -> list[CellResult]:
        return [c for c in self.cells if c.failed]

    def cell(self, mu: int, w: int) -> CellResult:
        for c in self.cells:
            if c.mu == mu and c.w == w:
                return c
        raise KeyError((mu, w))


def run_grid(spec: ExperimentSpec, parallel: int | None = None) -> Report:
    """Evaluate every cell; results are ordered by (mu, w, grid position)
    whatever the execution order or degree of parallelism."""
    parallel = default_parallelism() if parallel is None else parallel
    if parallel <= 1:
        results = [run_cell(spec, cell) for cell in spec.cells()]
    else:
        with ProcessPoolExecutor(parallel) as pool:
            results = [run_cell(spec, cell, parallel=parallel, pool=pool)
                       for cell in spec.cells()]
    results.sort(key=lambda c: (c.mu, c.w, c.cell.index))
    return Report(spec, results)
