"""
Runtime without a budget
========================

Without replacement and w = 2 the expected time to find both optima grows
roughly like (mu^2 / w) n log n, because a lone member left on one branch is
selected as a competitor only rarely. The lone column counts runs in which a
branch shrank to a single member.
"""

from rtslab import BudgetFormula, ExperimentSpec, Protocol, SelectionPolicy, run_grid

spec = ExperimentSpec(protocol=Protocol.RUNTIME_GROWTH, n=100, mu_list=(4, 8, 16),
                      w_list=(2, "mu"), policy=SelectionPolicy.WITHOUT_REPLACEMENT, runs=30,
                      master_seed=3, budget=BudgetFormula.UNBOUNDED)
report = run_grid(spec)

print("  mu    w     mean gens      std   lone  success")
for c in report.cells:
    print(f"{c.mu:4d} {c.w:4d}  {c.mean_generations:12.1f} {c.std_generations:8.1f}"
          f"  {c.lone_count:4d}  {c.success_count:4d}")
