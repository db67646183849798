"""Generation steps and the run loop of the (mu+1) EA variants.

Three replacement rules are supported: the plain (mu+1) EA (offspring
competes with a uniformly chosen worst member), restricted tournament
selection (offspring competes with the closest of ``w`` sampled members) and
deterministic crowding (offspring competes with its parent). In all of them
the offspring wins ties.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .core import DistanceKind, FitnessKind, Genome, RandomSource, evaluate


class SelectionPolicy(enum.IntEnum):
    WITH_REPLACEMENT = K.WITH_REPLACEMENT
    WITHOUT_REPLACEMENT = K.WITHOUT_REPLACEMENT


class AlgorithmKind(enum.IntEnum):
    PLAIN = K.PLAIN
    RTS = K.RTS
    DET_CROWDING = K.DET_CROWDING


class Status(enum.IntEnum):
    SUCCESS = K.SUCCESS
    BUDGET_EXHAUSTED = K.BUDGET_EXHAUSTED
    STAGNATION = K.STAGNATION


class ConfigError(ValueError):
    """An algorithm or experiment configuration is invalid."""


class InvariantViolation(RuntimeError):
    """A run broke a property that must hold for its configuration."""


@dataclass(frozen=True)
class StopCriteria:
    """When a run ends.

    ``stagnation_collapse`` stops once all members are copies of one optimum.
    ``stagnation_w_minus_1`` stops once the population is copies of one
    optimum plus exactly ``w - 1`` members of fitness ``n - 1`` on that
    optimum's branch (``w`` capped at ``mu`` without replacement); from there
    RTS without replacement can only shuffle optimal copies.
    """

    require_both_optima: bool = True
    budget: int | None = None
    stagnation_collapse: bool = False
    stagnation_w_minus_1: bool = False

    def __post_init__(self):
        if self.budget is not None and self.budget < 0:
            raise ConfigError("budget must be non-negative")
        if not (self.require_both_optima or self.budget is not None
                or self.stagnation_collapse or self.stagnation_w_minus_1):
            raise ConfigError("no stopping criterion enabled")


@dataclass(frozen=True)
class AlgorithmConfig:
    n: int
    mu: int
    w: int = 1
    kind: AlgorithmKind = AlgorithmKind.RTS
    policy: SelectionPolicy = SelectionPolicy.WITH_REPLACEMENT
    distance: DistanceKind = DistanceKind.GENOTYPIC
    fitness: FitnessKind = FitnessKind.TWOMAX
    stop: StopCriteria = field(default_factory=StopCriteria)
    check_extinction: bool = True

    def __post_init__(self):
        for name in ("n", "mu", "w"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        object.__setattr__(self, "kind", AlgorithmKind(self.kind))
        object.__setattr__(self, "policy", SelectionPolicy(self.policy))
        object.__setattr__(self, "distance", DistanceKind(self.distance))
        object.__setattr__(self, "fitness", FitnessKind(self.fitness))

    @property
    def extinction_guard(self) -> bool:
        # no-extinction guarantee for RTS without replacement, w >= 2
        return (self.check_extinction and self.kind == AlgorithmKind.RTS
                and self.policy == SelectionPolicy.WITHOUT_REPLACEMENT
                and self.w >= 2 and self.fitness == FitnessKind.TWOMAX)

    def params(self) -> np.ndarray:
        prm = np.zeros(K.N_PARAMS, dtype=np.int64)
        prm[K.P_N] = self.n
        prm[K.P_MU] = self.mu
        prm[K.P_W] = self.w
        prm[K.P_KIND] = int(self.kind)
        prm[K.P_POLICY] = int(self.policy)
        prm[K.P_DIST] = int(self.distance)
        prm[K.P_FIT] = int(self.fitness)
        prm[K.P_REQ_BOTH] = int(self.stop.require_both_optima)
        prm[K.P_BUDGET] = -1 if self.stop.budget is None else self.stop.budget
        prm[K.P_COLLAPSE] = int(self.stop.stagnation_collapse)
        prm[K.P_W_MINUS_1] = int(self.stop.stagnation_w_minus_1)
        prm[K.P_GUARD] = int(self.extinction_guard)
        return prm


@dataclass(frozen=True)
class RunResult:
    status: Status
    generations: int
    lone_occurred: bool
    best_branch0: int
    best_branch1: int

    @property
    def min_branch_best(self) -> int:
        return min(self.best_branch0, self.best_branch1)


@dataclass(frozen=True)
class GenerationEvents:
    parent: int
    competitor: int
    offspring_ones: int
    replaced_ones: int
    accepted: bool
    crossed_branches: bool
    extinction: bool
    lone_onset: bool


class Population:
    """Exactly ``mu`` genomes with cached ones-counts and fitness values.

    Members live as rows of a packed uint64 matrix so the compiled kernels
    can work on them directly.
    """

    def __init__(self, words: np.ndarray, n: int, fitness: FitnessKind = FitnessKind.TWOMAX):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[0] < 1 or words.shape[1] != K.n_words(n):
            raise ValueError("population matrix has the wrong shape")
        self.n = n
        self.fitness_kind = FitnessKind(fitness)
        self.words = words
        self.ones = np.array([K.popcount_row(r) for r in words], dtype=np.int64)
        self.fitness = np.array([K.fitness_of(int(fitness), o, n) for o in self.ones],
                                dtype=np.int64)
        # scratch state for tournaments; part of the population so that a
        # stepped copy reproduces the same random stream
        self.perm = np.arange(words.shape[0], dtype=np.int64)

    @classmethod
    def from_genomes(cls, genomes, fitness: FitnessKind = FitnessKind.TWOMAX) -> "Population":
        genomes = list(genomes)
        n = genomes[0].n
        if any(g.n != n for g in genomes):
            raise ValueError("genomes have different lengths")
        return cls(np.stack([g.words for g in genomes]), n, fitness)

    def __len__(self):
        return self.words.shape[0]

    @property
    def mu(self) -> int:
        return self.words.shape[0]

    def genome(self, i: int) -> Genome:
        return Genome(self.words[i].copy(), self.n)

    def __getitem__(self, i: int) -> tuple[Genome, int]:
        return self.genome(i), int(self.fitness[i])

    def genomes(self) -> list[Genome]:
        return [self.genome(i) for i in range(self.mu)]

    def copy(self) -> "Population":
        other = Population.__new__(Population)
        other.n = self.n
        other.fitness_kind = self.fitness_kind
        other.words = self.words.copy()
        other.ones = self.ones.copy()
        other.fitness = self.fitness.copy()
        other.perm = self.perm.copy()
        return other

    def check(self) -> None:
        """Raise if any cached value disagrees with a recomputation."""
        for i in range(self.mu):
            g = self.genome(i)
            if int(self.fitness[i]) != evaluate(self.fitness_kind, g):
                raise InvariantViolation(f"cached fitness of member {i} is stale")


def init_population(config: AlgorithmConfig, rng: RandomSource) -> Population:
    words = np.empty((config.mu, K.n_words(config.n)), dtype=np.uint64)
    ones = np.empty(config.mu, dtype=np.int64)
    fit = np.empty(config.mu, dtype=np.int64)
    K.init_population(words, ones, fit, config.n, int(config.fitness), rng.state)
    pop = Population.__new__(Population)
    pop.n = config.n
    pop.fitness_kind = config.fitness
    pop.words, pop.ones, pop.fitness = words, ones, fit
    pop.perm = np.arange(config.mu, dtype=np.int64)
    return pop


def select_tournament(pop: Population, w: int, policy: SelectionPolicy,
                      rng: RandomSource) -> list[int]:
    """Indices entering a restricted tournament.

    With replacement this is ``w`` independent uniform draws; without it is
    ``min(w, mu)`` distinct members, i.e. the whole population once
    ``w >= mu``.
    """
    out = np.empty(max(w, pop.mu), dtype=np.int64)
    k = K.select_tournament(pop.mu, w, int(policy), pop.perm, rng.state, out)
    return out[:k].tolist()


def closest_in_tournament(y: Genome, tournament, pop: Population,
                          distance: DistanceKind, rng: RandomSource) -> int:
    if len(tournament) == 0:
        raise ValueError("empty tournament")
    tour = np.asarray(tournament, dtype=np.int64)
    return int(K.closest_member(pop.words, pop.ones, y.words, int(K.popcount_row(y.words)),
                                tour, tour.shape[0], int(distance), rng.state))


def _step(pop: Population, config: AlgorithmConfig, rng: RandomSource, kind):
    if config.kind != kind:
        raise ConfigError(f"configuration is for {config.kind.name}, not {kind.name}")
    if pop.n != config.n or pop.mu != config.mu:
        raise ConfigError("population does not match the configuration")
    new = pop.copy()
    tour = np.empty(max(config.w, config.mu), dtype=np.int64)
    ybuf = np.empty(new.words.shape[1], dtype=np.uint64)
    ev = np.zeros(K.N_EVENTS, dtype=np.int64)
    K.step(new.words, new.ones, new.fitness, config.params(), new.perm, tour, ybuf,
           rng.state, ev)
    n = config.n
    bz = K.branch_of(ev[K.E_REPLACED_ONES], n)
    by = K.branch_of(ev[K.E_OFFSPRING_ONES], n)
    accepted = bool(ev[K.E_ACCEPTED])
    crossed = accepted and bz != by
    before = branch_counts(pop.ones, n)
    after = branch_counts(new.ones, n)
    extinction = crossed and bz >= 0 and before[bz] == 1
    mu = config.mu
    lone_onset = (crossed and K._is_lone(after[0], after[1], mu)
                  and not K._is_lone(before[0], before[1], mu))
    events = GenerationEvents(
        parent=int(ev[K.E_PARENT]), competitor=int(ev[K.E_COMPETITOR]),
        offspring_ones=int(ev[K.E_OFFSPRING_ONES]), replaced_ones=int(ev[K.E_REPLACED_ONES]),
        accepted=accepted, crossed_branches=crossed, extinction=bool(extinction),
        lone_onset=bool(lone_onset))
    return new, events


def step_rts(pop: Population, config: AlgorithmConfig, rng: RandomSource):
    """One RTS generation. Returns ``(new_population, events)``; ``pop`` is
    left untouched."""
    return _step(pop, config, rng, AlgorithmKind.RTS)


def step_plain(pop: Population, config: AlgorithmConfig, rng: RandomSource) -> Population:
    return _step(pop, config, rng, AlgorithmKind.PLAIN)[0]


def step_det_crowding(pop: Population, config: AlgorithmConfig, rng: RandomSource) -> Population:
    return _step(pop, config, rng, AlgorithmKind.DET_CROWDING)[0]


def branch_counts(ones: np.ndarray, n: int) -> tuple[int, int]:
    ones = np.asarray(ones)
    return int(np.count_nonzero(2 * ones < n)), int(np.count_nonzero(2 * ones > n))


def branch_stats(pop: Population, n: int | None = None) -> tuple[int, int, int, int]:
    """``(count0, count1, best0, best1)`` for the current population.

    Counts are over strict branches (ones < n/2, ones > n/2). Bests are the
    largest TwoMax value on each side including midpoint members, with the
    sentinel ``ceil(n/2)`` for an empty side.
    """
    n = pop.n if n is None else n
    ones = pop.ones
    c0, c1 = branch_counts(ones, n)
    sentinel = (n + 1) // 2
    side0 = ones[2 * ones <= n]
    side1 = ones[2 * ones >= n]
    best0 = int(n - side0.min()) if side0.size else sentinel
    best1 = int(side1.max()) if side1.size else sentinel
    return c0, c1, best0, best1


class _Run:
    """Mutable state of one run, shared with the compiled loop."""

    def __init__(self, config: AlgorithmConfig, rng: RandomSource, pop: Population | None):
        self.config = config
        self.rng = rng
        self.prm = config.params()
        self.pop = init_population(config, rng) if pop is None else pop.copy()
        self.hist = np.zeros(config.n + 1, dtype=np.int64)
        self.tour = np.empty(max(config.w, config.mu), dtype=np.int64)
        self.ybuf = np.empty(self.pop.words.shape[1], dtype=np.uint64)
        self.st = np.zeros(K.N_STATE, dtype=np.int64)

    def begin(self, trace):
        K.begin_run(self.pop.ones, self.hist, self.prm, self.st, trace)

    def advance(self, max_steps, trace):
        p = self.pop
        return K.advance(p.words, p.ones, p.fitness, self.hist, p.perm, self.tour, self.ybuf,
                         self.rng.state, self.prm, self.st, max_steps, trace)

    def result(self) -> RunResult:
        st = self.st
        code = int(st[K.S_STATUS])
        if code == K.VIOLATION:
            side = int(st[K.S_VIOL_BRANCH])
            raise InvariantViolation(
                f"branch {side} became extinct at generation {int(st[K.S_GEN])} although the "
                f"no-extinction condition held (n={self.config.n}, mu={self.config.mu}, "
                f"w={self.config.w}, {self.config.distance.name.lower()})")
        return RunResult(status=Status(code), generations=int(st[K.S_GEN]),
                         lone_occurred=bool(st[K.S_LONE]), best_branch0=int(st[K.S_BEST0]),
                         best_branch1=int(st[K.S_BEST1]))


_NO_TRACE = np.zeros((0, K.TRACE_COLS), dtype=np.int64)
_FOREVER = np.int64(1) << np.int64(62)


def run(config: AlgorithmConfig, seed: int | RandomSource, population: Population | None = None,
        trace=None) -> RunResult:
    """Run one EA until the first enabled stopping criterion fires.

    Success is checked after initialisation and after every generation.
    ``trace``, if given, is called with an int array of rows
    ``(generation, count0, count1, best0, best1)`` as the run progresses.
    Raises :class:`InvariantViolation` when the no-extinction guarantee for
    RTS without replacement is broken.
    """
    rng = seed if isinstance(seed, RandomSource) else RandomSource(seed)
    state = _Run(config, rng, population)
    if trace is None:
        state.begin(_NO_TRACE)
        if state.st[K.S_STATUS] == K.RUNNING:
            state.advance(_FOREVER, _NO_TRACE)
        return state.result()
    buf = np.zeros((4096, K.TRACE_COLS), dtype=np.int64)
    state.begin(buf)
    while True:
        if state.st[K.S_STATUS] == K.RUNNING and state.st[K.S_TRACE_LEN] < buf.shape[0]:
            state.advance(_FOREVER, buf)
        trace(buf[: state.st[K.S_TRACE_LEN]].copy())
        state.st[K.S_TRACE_LEN] = 0
        if state.st[K.S_STATUS] != K.RUNNING:
            return state.result()
