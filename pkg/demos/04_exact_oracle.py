"""
Exact Markov-chain ground truth
===============================

For tiny instances every population is a state of a finite Markov chain. The
oracle builds the exact transition matrix and compares it with simulation.
"""

import numpy as np

from rtslab import (AlgorithmConfig, AlgorithmKind, RandomSource, SelectionPolicy, Status,
                    StopCriteria, build_model, expected_absorption_time,
                    init_split_probability_exact, initial_distribution, run,
                    success_probability_within)

config = AlgorithmConfig(n=2, mu=2, w=2, policy=SelectionPolicy.WITHOUT_REPLACEMENT)
model = build_model(config)
init = initial_distribution(model)
print(f"{model.size} states, {model.transitions.nnz} nonzero transitions")

# probability of holding both 00 and 11 within T generations
rng = RandomSource(0)
for T in (0, 1, 2, 5, 10):
    exact = success_probability_within(model, init, T)
    sim_cfg = AlgorithmConfig(n=2, mu=2, w=2, policy=config.policy, stop=StopCriteria(budget=T))
    sim = np.mean([run(sim_cfg, rng).status == Status.SUCCESS for _ in range(20_000)])
    print(f"T={T:2d}  exact {exact:.6f}  simulated {sim:.6f}")

# expected time for the plain (mu+1) EA
plain = build_model(AlgorithmConfig(n=2, mu=2, kind=AlgorithmKind.PLAIN))
print("\nplain EA, expected generations:",
      expected_absorption_time(plain, initial_distribution(plain)).expectation)

# probability that an initial population straddles the middle by sigma
print("initial split, n=4, mu=2, sigma=1:", init_split_probability_exact(4, 2, 1))
