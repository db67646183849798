"""
Success rates under the standard budget
=======================================

Within 10 mu n ln n generations, which (mu, w) pairs find both optima? With
replacement a window of w >= 8 and mu >= 32 is needed. Without replacement
and w = 2 the success rate first rises with mu and then drops steeply: a
lone member on one branch gets too few chances to improve.
"""

from rtslab import (BudgetFormula, DistanceKind, ExperimentSpec, Protocol, SelectionPolicy,
                    run_grid)

RUNS = 20  # 100 gives tighter rates; 20 keeps this under a minute


def table(spec):
    report = run_grid(spec)
    for cell in report.cells:
        bar = "#" * cell.success_count
        print(f"  mu={cell.mu:3d} w={cell.w:2d}  {cell.success_count:3d}/{cell.runs}  {bar}")


print("with replacement, genotypic distance")
table(ExperimentSpec(protocol=Protocol.SUCCESS_RATE, n=100, mu_list=(2, 8, 32), w_list=(1, 8),
                     runs=RUNS, master_seed=5, budget=BudgetFormula.STANDARD))

print("\nwithout replacement, phenotypic distance, w = 2")
table(ExperimentSpec(protocol=Protocol.SUCCESS_RATE, n=100, mu_list=(2, 8, 32), w_list=(2,),
                     policy=SelectionPolicy.WITHOUT_REPLACEMENT,
                     distance=DistanceKind.PHENOTYPIC, runs=RUNS, master_seed=5,
                     budget=BudgetFormula.STANDARD))
