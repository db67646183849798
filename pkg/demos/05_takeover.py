"""
Takeover
========

Run until both optima are found or one branch has taken over the population,
and record how far the weaker branch got (the smaller of the two best
fitness values ever seen). Near n/2 = 50 means takeover right after
initialisation; 100 means both optima were found.
"""

from rtslab import BudgetFormula, ExperimentSpec, Protocol, SelectionPolicy, run_grid

for policy, w_list in ((SelectionPolicy.WITH_REPLACEMENT, (1, 2, 8)),
                       (SelectionPolicy.WITHOUT_REPLACEMENT, (2,))):
    spec = ExperimentSpec(protocol=Protocol.TAKEOVER, n=100, mu_list=(2, 8, 32), w_list=w_list,
                          policy=policy, runs=30, master_seed=9, budget=BudgetFormula.UNBOUNDED)
    print(policy.name.lower())
    for c in run_grid(spec).cells:
        print(f"  mu={c.mu:3d} w={c.w:2d}  min branch best {c.mean_min_branch_best:6.2f}"
              f" +- {c.std_min_branch_best:5.2f}")
