"""Exact Markov-chain analysis of the (mu+1) EA on tiny instances.

A state is a population multiset, written as a sorted tuple of genomes
encoded as integers (bit ``i`` of the integer is bit ``i`` of the genome).
Transition probabilities are computed exhaustively over parent choices, all
``2**n`` mutation masks, all tournaments and all tie-breaks, in exact
rational arithmetic; conversion to floats happens once per transition row.
States containing both ``0^n`` and ``1^n`` are absorbing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .core import DistanceKind, FitnessKind
from .engine import AlgorithmConfig, AlgorithmKind, SelectionPolicy


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_n: int = 3
    max_mu: int = 3
    max_state_count: int = 10_000
    max_tournaments: int = 100_000

    def check(self, n: int, mu: int) -> int:
        if n < 1 or mu < 1:
            raise OracleLimitError("n and mu must be positive")
        if n > self.max_n:
            raise OracleLimitError(f"n={n} exceeds the oracle limit max_n={self.max_n}")
        if mu > self.max_mu:
            raise OracleLimitError(f"mu={mu} exceeds the oracle limit max_mu={self.max_mu}")
        count = state_count(n, mu)
        if count > self.max_state_count:
            raise OracleLimitError(
                f"{count} states exceed the oracle limit max_state_count={self.max_state_count}")
        return count


def state_count(n: int, mu: int) -> int:
    return math.comb(2**n + mu - 1, mu)


@dataclass
class MarkovModel:
    n: int
    mu: int
    states: list[tuple[int, ...]]
    index: dict[tuple[int, ...], int]
    absorbing: np.ndarray
    config: AlgorithmConfig | None = None
    transitions: sp.csr_matrix | None = None

    @property
    def size(self) -> int:
        return len(self.states)


def is_absorbing(state, n: int) -> bool:
    return 0 in state and (1 << n) - 1 in state


def enumerate_states(n: int, mu: int, limits: OracleLimits = OracleLimits()) -> MarkovModel:
    """All population multisets of ``mu`` genomes of length ``n``, in
    lexicographic order of their sorted tuples."""
    limits.check(n, mu)
    states = list(itertools.combinations_with_replacement(range(2**n), mu))
    index = {s: i for i, s in enumerate(states)}
    absorbing = np.array([is_absorbing(s, n) for s in states], dtype=bool)
    return MarkovModel(n=n, mu=mu, states=states, index=index, absorbing=absorbing)


def fitness_of(kind, ones: int, n: int) -> int:
    if kind == FitnessKind.ONEMAX:
        return ones
    if kind == FitnessKind.ZEROMAX:
        return n - ones
    return max(ones, n - ones)


def _distance(kind, a: int, b: int) -> int:
    if kind == DistanceKind.GENOTYPIC:
        return (a ^ b).bit_count()
    return abs(a.bit_count() - b.bit_count())


@lru_cache(maxsize=None)
def _mask_probabilities(n: int) -> tuple[tuple[int, Fraction], ...]:
    p = Fraction(1, n)
    return tuple((m, p ** m.bit_count() * (1 - p) ** (n - m.bit_count())) for m in range(2**n))


def _tie_break(state, members, y, kind) -> dict[int, Fraction]:
    """Competitor distribution for one tournament (a sequence of indices)."""
    dists = [_distance(kind, state[j], y) for j in members]
    best = min(dists)
    tied = [j for j, d in zip(members, dists) if d == best]
    share = Fraction(1, len(tied))
    out: dict[int, Fraction] = {}
    for j in tied:
        out[j] = out.get(j, 0) + share
    return out


def _competitors(state, y, parent, config: AlgorithmConfig, limits: OracleLimits):
    mu = len(state)
    out: dict[int, Fraction] = {}
    if config.kind == AlgorithmKind.DET_CROWDING:
        return {parent: Fraction(1)}
    if config.kind == AlgorithmKind.PLAIN:
        fits = [fitness_of(config.fitness, g.bit_count(), config.n) for g in state]
        worst = min(fits)
        tied = [j for j in range(mu) if fits[j] == worst]
        return {j: Fraction(1, len(tied)) for j in tied}
    if config.policy == SelectionPolicy.WITH_REPLACEMENT:
        if mu**config.w > limits.max_tournaments:
            raise OracleLimitError(f"{mu}**{config.w} tournaments exceed the oracle limit")
        tournaments = itertools.product(range(mu), repeat=config.w)
        weight = Fraction(1, mu**config.w)
    else:
        k = min(config.w, mu)
        tournaments = itertools.combinations(range(mu), k)
        weight = Fraction(1, math.comb(mu, k))
    for members in tournaments:
        for j, p in _tie_break(state, members, y, config.distance).items():
            out[j] = out.get(j, 0) + weight * p
    return out


def transition_distribution(state, config: AlgorithmConfig, exact: bool = False,
                            limits: OracleLimits = OracleLimits()) -> dict:
    """Successor distribution of one generation from ``state``.

    Returns a mapping from successor states (sorted tuples) to probabilities,
    as floats or, with ``exact=True``, as :class:`fractions.Fraction`.
    """
    state = tuple(sorted(state))
    n, mu = config.n, len(state)
    if mu != config.mu:
        raise ValueError(f"state has {mu} members, configuration expects {config.mu}")
    limits.check(n, mu)
    if is_absorbing(state, n):
        return {state: Fraction(1) if exact else 1.0}
    fk = config.fitness
    dist: dict[tuple[int, ...], Fraction] = {}
    cache = {}
    for parent in range(mu):
        for mask, pm in _mask_probabilities(n):
            y = state[parent] ^ mask
            key = (y, parent) if config.kind == AlgorithmKind.DET_CROWDING else y
            if key not in cache:
                cache[key] = _competitors(state, y, parent, config, limits)
            fy = fitness_of(fk, y.bit_count(), n)
            base = Fraction(1, mu) * pm
            for z, pz in cache[key].items():
                if fy >= fitness_of(fk, state[z].bit_count(), n):
                    nxt = tuple(sorted(state[:z] + (y,) + state[z + 1:]))
                else:
                    nxt = state
                dist[nxt] = dist.get(nxt, 0) + base * pz
    if exact:
        return dist
    return {s: float(p) for s, p in dist.items()}


def build_model(config: AlgorithmConfig, limits: OracleLimits = OracleLimits()) -> MarkovModel:
    """Enumerate states and fill the sparse transition matrix."""
    model = enumerate_states(config.n, config.mu, limits)
    rows, cols, vals = [], [], []
    for i, s in enumerate(model.states):
        for t, p in transition_distribution(s, config, limits=limits).items():
            rows.append(i)
            cols.append(model.index[t])
            vals.append(p)
    model.config = config
    model.transitions = sp.csr_matrix((vals, (rows, cols)), shape=(model.size, model.size))
    return model


def initial_distribution(model: MarkovModel, exact: bool = False):
    """Law of the sorted initial population under uniform initialisation."""
    total = Fraction(1, 2 ** (model.n * model.mu))
    probs = []
    for s in model.states:
        ways = math.factorial(model.mu)
        for _, grp in itertools.groupby(s):
            ways //= math.factorial(len(list(grp)))
        probs.append(ways * total)
    if exact:
        return probs
    return np.array([float(p) for p in probs])


def success_probability_within(model: MarkovModel, initial_distribution, T: int) -> float:
    """Probability of holding both optima at some generation ``t <= T``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    if model.transitions is None:
        raise ValueError("model has no transitions; use build_model")
    v = np.asarray(initial_distribution, dtype=float)
    pt = model.transitions.T.tocsr()
    for _ in range(T):
        v = pt @ v
    return float(v[model.absorbing].sum())


class AbsorptionTime(NamedTuple):
    expectation: float
    trapped_states: tuple  # states from which absorption is impossible


def _reachable(adj: sp.csr_matrix, sources) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    stack = list(sources)
    seen[stack] = True
    while stack:
        i = stack.pop()
        for j in adj.indices[adj.indptr[i]:adj.indptr[i + 1]]:
            if not seen[j]:
                seen[j] = True
                stack.append(j)
    return seen


def expected_absorption_time(model: MarkovModel, initial_distribution) -> AbsorptionTime:
    """Expected number of generations until both optima are present.

    Infinite if the chain can, with positive probability, enter states from
    which the absorbing set is unreachable; those states are reported.
    """
    P = model.transitions
    if P is None:
        raise ValueError("model has no transitions; use build_model")
    v = np.asarray(initial_distribution, dtype=float)
    support = np.flatnonzero(v > 0)
    forward = _reachable((P > 0).astype(np.int8).tocsr(), support)
    can_absorb = _reachable((P.T > 0).astype(np.int8).tocsr(), np.flatnonzero(model.absorbing))
    trapped = np.flatnonzero(forward & ~can_absorb)
    if trapped.size:
        return AbsorptionTime(math.inf, tuple(model.states[i] for i in trapped))
    transient = np.flatnonzero(~model.absorbing)
    if transient.size == 0 or v[transient].sum() == 0:
        return AbsorptionTime(0.0, ())
    Q = P[transient][:, transient].toarray()
    t = np.linalg.solve(np.eye(transient.size) - Q, np.ones(transient.size))
    return AbsorptionTime(float(v[transient] @ t), ())


def _binomial_tail(n: int, pred) -> Fraction:
    return Fraction(sum(math.comb(n, k) for k in range(n + 1) if pred(k)), 2**n)


def init_split_probability_exact(n: int, mu: int, sigma) -> Fraction:
    """Exact probability that a uniform initial population has a member with
    at most ``n/2 - sigma`` ones and a member with at least ``n/2 + sigma``.

    ``sigma`` may be any rational in ``[0, n/2]``.
    """
    sigma = Fraction(sigma)
    if not 0 <= sigma <= Fraction(n, 2):
        raise ValueError("sigma must lie in [0, n/2]")
    p_low = _binomial_tail(n, lambda k: 2 * k <= n - 2 * sigma)
    p_high = _binomial_tail(n, lambda k: 2 * k >= n + 2 * sigma)
    p_mid = _binomial_tail(n, lambda k: n - 2 * sigma < 2 * k < n + 2 * sigma)
    # for sigma = 0 and even n both tails contain k = n/2, so the joint
    # "neither" event is the empty open interval rather than 1 - p_low - p_high
    return 1 - (1 - p_low) ** mu - (1 - p_high) ** mu + p_mid**mu


def init_split_lower_bound(n: int, mu: int, sigma) -> Fraction:
    """The closed-form bound ``1 - 2((1 + p)/2)**mu`` with ``p`` the mass
    strictly inside the gap of width ``sigma`` around ``n/2``."""
    sigma = Fraction(sigma)
    p_mid = _binomial_tail(n, lambda k: n - 2 * sigma < 2 * k < n + 2 * sigma)
    return 1 - 2 * ((1 + p_mid) / 2) ** mu
