"""Self-checks run by ``rtslab validate``.

The fast level takes seconds: exact oracle cross-checks, tie-break
frequencies and distance properties. The full level runs the acceptance
criteria: success rates, runtimes and takeover values at n = 100, plus the
large-sample engine and oracle comparisons. It takes a few minutes.

Checks live in the module-level registries ``FAST_CHECKS`` and
``FULL_CHECKS`` (name -> callable taking a :class:`Context`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import oracle
from .core import DistanceKind, Genome, RandomSource, distance, random_genome
from .engine import (AlgorithmConfig, AlgorithmKind, Population, SelectionPolicy, Status,
                     StopCriteria, closest_in_tournament, init_population, run,
                     select_tournament)
from .experiments import (W_EQUALS_MU, BudgetFormula, ExperimentSpec, Protocol, Report,
                          run_grid)

WITH = SelectionPolicy.WITH_REPLACEMENT
WITHOUT = SelectionPolicy.WITHOUT_REPLACEMENT
GENO = DistanceKind.GENOTYPIC
PHENO = DistanceKind.PHENOTYPIC

# one fixed master seed for every statistical check
MASTER_SEED = 20240601


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: str
    expected: str

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} {self.name}: measured {self.measured}; expected {self.expected}"


@dataclass
class Context:
    """Shared state for one validation session; caches grid reports so the
    extinction check can inspect the grids the other criteria ran."""

    parallel: int | None = None
    seed: int = MASTER_SEED
    reports: dict[str, list[Report]] = field(default_factory=dict)

    def grid(self, key: str, spec: ExperimentSpec) -> Report:
        for rep in self.reports.get(key, []):
            if rep.spec == spec:
                return rep
        rep = run_grid(spec, parallel=self.parallel)
        self.reports.setdefault(key, []).append(rep)
        return rep


def binomial_band(p: float, trials: int, k: float = 3.0) -> float:
    return k * math.sqrt(p * (1 - p) / trials)


# ---------------------------------------------------------------------------
# independent brute-force transition enumerator
#
# Written from the algorithm description alone, over ordered populations of
# bit tuples; it shares no code with the oracle module.

def _bits(v: int, n: int) -> tuple[int, ...]:
    return tuple((v >> i) & 1 for i in range(n))


def brute_force_transition(pop_ints, n: int, w: int, policy: SelectionPolicy,
                           dist_kind: DistanceKind = GENO) -> dict[tuple[int, ...], Fraction]:
    """Successor law of one RTS generation on TwoMax, keyed by sorted tuples
    of genome integers."""
    pop = [_bits(v, n) for v in pop_ints]
    mu = len(pop)

    def twomax(x):
        s = sum(x)
        return max(s, n - s)

    def dist(a, b):
        if dist_kind == GENO:
            return sum(u != v for u, v in zip(a, b))
        return abs(sum(a) - sum(b))

    if policy == WITH:
        tours = list(itertools.product(range(mu), repeat=w))
    else:
        tours = list(itertools.permutations(range(mu), min(w, mu)))
    out: dict[tuple[int, ...], Fraction] = {}
    for parent in range(mu):
        for flips in itertools.product((0, 1), repeat=n):
            k = sum(flips)
            p_mut = Fraction(1, n) ** k * Fraction(n - 1, n) ** (n - k)
            y = tuple(b ^ f for b, f in zip(pop[parent], flips))
            for tour in tours:
                best = min(dist(pop[j], y) for j in tour)
                entries = [j for j in tour if dist(pop[j], y) == best]
                for z in entries:
                    p = Fraction(1, mu) * p_mut / len(tours) / len(entries)
                    nxt = list(pop)
                    if twomax(y) >= twomax(pop[z]):
                        nxt[z] = y
                    key = tuple(sorted(sum(b << i for i, b in enumerate(x)) for x in nxt))
                    out[key] = out.get(key, Fraction(0)) + p
    return out


def brute_force_init_split(n: int, mu: int, sigma) -> Fraction:
    """Enumerate every ordered initial population."""
    sigma = Fraction(sigma)
    hits = 0
    for pop in itertools.product(range(2**n), repeat=mu):
        ones = [v.bit_count() for v in pop]
        lo = any(2 * o <= n - 2 * sigma for o in ones)
        hi = any(2 * o >= n + 2 * sigma for o in ones)
        hits += lo and hi
    return Fraction(hits, 2 ** (n * mu))


def _small_config(w, policy, n=2, mu=2, **kw) -> AlgorithmConfig:
    return AlgorithmConfig(n=n, mu=mu, w=w, kind=AlgorithmKind.RTS, policy=policy, **kw)


def engine_success_frequency(config: AlgorithmConfig, T: int, runs: int, seed: int) -> float:
    cfg = AlgorithmConfig(n=config.n, mu=config.mu, w=config.w, kind=config.kind,
                          policy=config.policy, distance=config.distance,
                          fitness=config.fitness, stop=StopCriteria(budget=T))
    rng = RandomSource(seed)
    hits = sum(run(cfg, rng).status == Status.SUCCESS for _ in range(runs))
    return hits / runs


def oracle_success(config: AlgorithmConfig, T: int) -> float:
    model = oracle.build_model(config)
    return oracle.success_probability_within(model, oracle.initial_distribution(model), T)


def tournament_inclusion(mu: int, w: int, trials: int, seed: int, member: int = 0) -> float:
    pop = Population(np.zeros((mu, 1), dtype=np.uint64), 1)
    rng = RandomSource(seed)
    hits = 0
    for _ in range(trials):
        hits += member in select_tournament(pop, w, WITHOUT, rng)
    return hits / trials


# ---------------------------------------------------------------------------
# fast checks

def check_row_sums(ctx: Context) -> CheckResult:
    worst = 0.0
    for n, mu in ((2, 2), (3, 2), (2, 3)):
        for w, pol in itertools.product((1, 2, 3), (WITH, WITHOUT)):
            model = oracle.build_model(_small_config(w, pol, n=n, mu=mu))
            sums = np.asarray(model.transitions.sum(axis=1)).ravel()
            worst = max(worst, float(np.abs(sums - 1).max()))
    return CheckResult("oracle-row-sums", worst <= 1e-12, f"max |row sum - 1| = {worst:.3g}",
                       "<= 1e-12")


def check_brute_force(ctx: Context) -> CheckResult:
    bad = []
    for w, pol, dk in itertools.product((1, 2, 3), (WITH, WITHOUT), (GENO, PHENO)):
        cfg = _small_config(w, pol, distance=dk)
        for state in ((1, 2), (0, 1), (1, 1), (0, 2)):
            exact = oracle.transition_distribution(state, cfg, exact=True)
            brute = brute_force_transition(state, 2, w, pol, dk)
            if {k: v for k, v in exact.items() if v} != brute:
                bad.append((w, pol.name, dk.name, state))
    return CheckResult("oracle-brute-force", not bad,
                       f"{len(bad)} mismatching transition rows" + (f" {bad[:3]}" if bad else ""),
                       "exact agreement with the independent enumerator")


def check_policy_coincidence(ctx: Context) -> CheckResult:
    a = oracle.build_model(_small_config(1, WITH)).transitions
    b = oracle.build_model(_small_config(1, WITHOUT)).transitions
    diff = float(abs(a - b).max())
    return CheckResult("oracle-w1-policy-coincidence", diff == 0.0, f"max difference {diff:.3g}",
                       "0")


def check_oracle_t0(ctx: Context) -> CheckResult:
    p = oracle_success(_small_config(2, WITHOUT), 0)
    return CheckResult("oracle-T0", abs(p - 0.125) < 1e-15, repr(p), "0.125")


def check_tie_break(ctx: Context) -> CheckResult:
    # offspring 0011 is at Hamming distance 2 from both 0000 and 1111
    pop = Population.from_genomes([Genome.from_string("0000"), Genome.from_string("1111")])
    y = Genome.from_string("0011")
    rng = RandomSource(ctx.seed)
    trials = 20_000
    freq = sum(closest_in_tournament(y, [0, 1], pop, GENO, rng) == 0
               for _ in range(trials)) / trials
    band = binomial_band(0.5, trials)
    return CheckResult("tie-break-uniform", abs(freq - 0.5) <= band, f"{freq:.4f}",
                       f"0.5 +- {band:.4f}")


def check_distances(ctx: Context) -> CheckResult:
    rng = RandomSource(ctx.seed + 1)
    bad = 0
    for _ in range(2000):
        n = 1 + rng.below(130)
        x, y = random_genome(n, rng), random_genome(n, rng)
        g, p = distance(GENO, x, y), distance(PHENO, x, y)
        bad += not (0 <= p <= g <= n and g == distance(GENO, y, x) and distance(GENO, x, x) == 0
                    and g % 2 == p % 2)
    return CheckResult("distance-properties", bad == 0, f"{bad} violations in 2000 pairs",
                       "0 violations")


def check_init_split_small(ctx: Context) -> CheckResult:
    exact = oracle.init_split_probability_exact(4, 2, 1)
    brute = brute_force_init_split(4, 2, 1)
    ok = exact == brute == Fraction(50, 256)
    return CheckResult("init-split-exact", ok, f"{exact} (brute force {brute})", "50/256")


def check_engine_vs_oracle_fast(ctx: Context) -> CheckResult:
    cfg = _small_config(2, WITHOUT)
    ref = oracle_success(cfg, 10)
    runs = 20_000
    freq = engine_success_frequency(cfg, 10, runs, ctx.seed + 2)
    band = binomial_band(ref, runs)
    return CheckResult("engine-oracle-T10", abs(freq - ref) <= band, f"{freq:.5f}",
                       f"{ref:.5f} +- {band:.5f}")


def check_inclusion_fast(ctx: Context) -> CheckResult:
    trials = 20_000
    freq = tournament_inclusion(8, 2, trials, ctx.seed + 3)
    band = binomial_band(0.25, trials)
    return CheckResult("tournament-inclusion", abs(freq - 0.25) <= band, f"{freq:.4f}",
                       f"0.25 +- {band:.4f}")


FAST_CHECKS = {
    "oracle-row-sums": check_row_sums,
    "oracle-brute-force": check_brute_force,
    "oracle-w1-policy-coincidence": check_policy_coincidence,
    "oracle-T0": check_oracle_t0,
    "tie-break-uniform": check_tie_break,
    "distance-properties": check_distances,
    "init-split-exact": check_init_split_small,
    "engine-oracle-T10": check_engine_vs_oracle_fast,
    "tournament-inclusion": check_inclusion_fast,
}


# ---------------------------------------------------------------------------
# acceptance criteria

def _spec(protocol, policy, dist, mu_list, w_list, budget, seed) -> ExperimentSpec:
    return ExperimentSpec(protocol=protocol, n=100, mu_list=tuple(mu_list),
                          w_list=tuple(w_list), policy=policy, distance=dist, runs=100,
                          master_seed=seed, budget=budget)


def a1_specs(seed):
    sr, std = Protocol.SUCCESS_RATE, BudgetFormula.STANDARD
    return [_spec(sr, WITH, GENO, [32], [8], std, seed), _spec(sr, WITH, GENO, [2], [1], std, seed)]


def a2_specs(seed):
    return [_spec(Protocol.SUCCESS_RATE, WITHOUT, PHENO, [8, 32], [2], BudgetFormula.STANDARD,
                  seed)]


def a3_specs(seed):
    return [_spec(Protocol.SUCCESS_RATE, WITHOUT, PHENO, [32], [2], BudgetFormula.ENHANCED, seed)]


def a4_specs(seed):
    rg, unb = Protocol.RUNTIME_GROWTH, BudgetFormula.UNBOUNDED
    return [_spec(rg, WITHOUT, GENO, [2, 32], [2], unb, seed),
            _spec(rg, WITHOUT, GENO, [128], [W_EQUALS_MU], unb, seed)]


def _cells(ctx, key, specs):
    return [ctx.grid(key, s) for s in specs]


def _failed(reports) -> list[str]:
    return [f"mu={c.mu} w={c.w}: {c.error}" for r in reports for c in r.failed_cells]


def check_a1(ctx: Context) -> CheckResult:
    big, small = _cells(ctx, "A1", a1_specs(ctx.seed))
    s_big = big.cell(32, 8).success_count if not _failed([big]) else -1
    s_small = small.cell(2, 1).success_count if not _failed([small]) else 101
    return CheckResult("A1 success region", s_big >= 95 and s_small <= 10,
                       f"success(32,8)={s_big}, success(2,1)={s_small}",
                       "success(32,8) >= 95 and success(2,1) <= 10")


def check_a2(ctx: Context) -> CheckResult:
    (rep,) = _cells(ctx, "A2", a2_specs(ctx.seed))
    if _failed([rep]):
        return CheckResult("A2 non-monotonic dip", False, "; ".join(_failed([rep])), ">= 20")
    s8, s32 = rep.cell(8, 2).success_count, rep.cell(32, 2).success_count
    return CheckResult("A2 non-monotonic dip", s8 - s32 >= 20,
                       f"success(8)={s8}, success(32)={s32}, difference {s8 - s32}",
                       "difference >= 20")


def check_a3(ctx: Context) -> CheckResult:
    (rep,) = _cells(ctx, "A3", a3_specs(ctx.seed))
    s = rep.cell(32, 2).success_count if not _failed([rep]) else -1
    return CheckResult("A3 enhanced budget", s >= 90, f"success(32,2)={s}", ">= 90")


def check_a4(ctx: Context) -> CheckResult:
    small_big, wide = _cells(ctx, "A4", a4_specs(ctx.seed))
    if _failed([small_big, wide]):
        return CheckResult("A4 runtime table", False, "; ".join(_failed([small_big, wide])),
                           "no failed cells")
    c2, c32, c128 = small_big.cell(2, 2), small_big.cell(32, 2), wide.cell(128, 128)
    ok = (1.9e3 <= c2.mean_generations <= 2.6e3 and 40 <= c2.lone_count <= 70
          and 2.7e5 <= c32.mean_generations <= 4.7e5 and c32.lone_count >= 95
          and 6.0e4 <= c128.mean_generations <= 8.3e4)
    measured = (f"(2,2) mean {c2.mean_generations:.4g} lone {c2.lone_count}; "
                f"(32,2) mean {c32.mean_generations:.4g} lone {c32.lone_count}; "
                f"(128,128) mean {c128.mean_generations:.4g}")
    expected = ("(2,2) mean in [1.9e3, 2.6e3] lone in [40, 70]; (32,2) mean in [2.7e5, 4.7e5] "
                "lone >= 95; (128,128) mean in [6.0e4, 8.3e4]")
    return CheckResult("A4 runtime table", ok, measured, expected)


def check_a5(ctx: Context) -> CheckResult:
    runs, T = 100_000, 50
    parts, ok = [], True
    for i, (w, pol) in enumerate(itertools.product((1, 2), (WITH, WITHOUT))):
        cfg = _small_config(w, pol)
        ref = oracle_success(cfg, T)
        freq = engine_success_frequency(cfg, T, runs, ctx.seed + 100 + i)
        band = binomial_band(ref, runs)
        ok &= abs(freq - ref) <= band
        parts.append(f"w={w} {pol.name.lower()}: {freq:.7f} vs {ref:.7f} +- {band:.7f}")
    return CheckResult("A5 oracle equivalence", ok, "; ".join(parts),
                       "each within 3 binomial sd of the oracle")


def check_a6(ctx: Context) -> CheckResult:
    exact = oracle.init_split_probability_exact(4, 2, 1)
    brute = brute_force_init_split(4, 2, 1)
    cfg = AlgorithmConfig(n=4, mu=2)
    rng = RandomSource(ctx.seed + 200)
    trials = 100_000
    hits = 0
    for _ in range(trials):
        ones = init_population(cfg, rng).ones
        hits += bool(ones.min() <= 1 and ones.max() >= 3)
    freq = hits / trials
    band = binomial_band(float(exact), trials)
    dominated = 0
    for n in range(1, 13):
        for mu in range(1, 9):
            for twice_sigma in range(0, n + 1):
                sigma = Fraction(twice_sigma, 2)
                if oracle.init_split_probability_exact(n, mu, sigma) < \
                        oracle.init_split_lower_bound(n, mu, sigma):
                    dominated += 1
    ok = exact == brute == Fraction(50, 256) and abs(freq - float(exact)) <= band and dominated == 0
    return CheckResult("A6 initial split", ok,
                       f"exact {exact}, brute force {brute}, Monte Carlo {freq:.5f}, "
                       f"{dominated} bound violations",
                       f"50/256, Monte Carlo within {band:.5f}, 0 bound violations")


def check_a7(ctx: Context) -> CheckResult:
    n, runs = 100, 1000
    limit = 2 * math.e * n * math.log(n)
    cfg = AlgorithmConfig(n=n, mu=1, w=1, stop=StopCriteria(require_both_optima=False,
                                                           stagnation_collapse=True))
    rng = RandomSource(ctx.seed + 300)
    slow = 0
    for _ in range(runs):
        res = run(cfg, rng)
        slow += res.generations > limit
    frac = slow / runs
    bound = 0.01 + binomial_band(0.01, runs)
    return CheckResult("A7 single-branch tail", frac <= bound,
                       f"{slow}/{runs} runs above {limit:.1f} generations",
                       f"fraction <= {bound:.4f}")


def check_a8(ctx: Context) -> CheckResult:
    trials = 100_000
    parts, ok = [], True
    for i, (mu, w) in enumerate(((8, 2), (32, 8), (1024, 128))):
        freq = tournament_inclusion(mu, w, trials, ctx.seed + 400 + i)
        p = w / mu
        band = binomial_band(p, trials)
        ok &= abs(freq - p) <= band
        parts.append(f"({mu},{w}): {freq:.4f} vs {p:.4f} +- {band:.4f}")
    return CheckResult("A8 tournament inclusion", ok, "; ".join(parts), "within 3 sd of w/mu")


def check_a9(ctx: Context) -> CheckResult:
    reports = []
    for key, make in (("A1", a1_specs), ("A2", a2_specs), ("A3", a3_specs), ("A4", a4_specs)):
        reports += _cells(ctx, key, make(ctx.seed))
    failed = _failed(reports)
    guarded = sum(len(c.records) for r in reports for c in r.cells
                  if r.spec.policy == WITHOUT and c.w >= 2)
    return CheckResult("A9 no extinction", not failed,
                       f"{len(failed)} violations over {guarded} guarded runs"
                       + (f": {failed[0]}" if failed else ""), "0 violations")


def check_a10(ctx: Context) -> CheckResult:
    tk, unb = Protocol.TAKEOVER, BudgetFormula.UNBOUNDED
    plain = ctx.grid("A10", _spec(tk, WITH, GENO, [8], [1], unb, ctx.seed))
    kept = ctx.grid("A10", _spec(tk, WITHOUT, GENO, [2], [2], unb, ctx.seed))
    if _failed([plain, kept]):
        return CheckResult("A10 takeover", False, "; ".join(_failed([plain, kept])),
                           "no failed cells")
    m1 = plain.cell(8, 1).mean_min_branch_best
    m2 = kept.cell(2, 2).mean_min_branch_best
    return CheckResult("A10 takeover", m1 <= 60 and m2 >= 60,
                       f"with/w=1/mu=8: {m1:.2f}; without/w=2/mu=2: {m2:.2f}",
                       "<= 60 and >= 60")


FULL_CHECKS = {
    "A1": check_a1, "A2": check_a2, "A3": check_a3, "A4": check_a4, "A5": check_a5,
    "A6": check_a6, "A7": check_a7, "A8": check_a8, "A9": check_a9, "A10": check_a10,
}


def run_checks(level: str = "fast", ctx: Context | None = None, report=print) -> list[CheckResult]:
    """Run a suite; each result is passed to ``report`` as it completes.
    A check that raises is recorded as a failure with the exception text."""
    if level not in ("fast", "full"):
        raise ValueError(f"unknown level {level!r}")
    ctx = ctx or Context()
    checks = dict(FAST_CHECKS)
    if level == "full":
        checks.update(FULL_CHECKS)
    results = []
    for name, fn in checks.items():
        try:
            res = fn(ctx)
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            res = CheckResult(name, False, f"raised {type(exc).__name__}: {exc}", "no error")
        results.append(res)
        if report is not None:
            report(res.line())
    return results
