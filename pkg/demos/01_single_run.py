"""
One run of restricted tournament selection on TwoMax
=====================================================

A population of mu bitstrings climbs towards 0^n and 1^n. Restricted
tournament selection lets an offspring replace only the closest of w sampled
members, which protects the two branches from each other.
"""

import numpy as np

from rtslab import AlgorithmConfig, SelectionPolicy, StopCriteria, run

# n = 100 bits, 8 members, window of 4, sampled without replacement
config = AlgorithmConfig(n=100, mu=8, w=4, policy=SelectionPolicy.WITHOUT_REPLACEMENT,
                         stop=StopCriteria(budget=200_000))

# the trace callback receives blocks of rows (generation, count0, count1, best0, best1)
blocks = []
result = run(config, seed=1, trace=blocks.append)
trace = np.concatenate(blocks)

print(result)
print("generations:", result.generations)

# how the two branches evolved: every 500th generation
print("\n  gen  zeros-side  ones-side  best0  best1")
for row in trace[::500]:
    print("{:5d}  {:10d}  {:9d}  {:5d}  {:5d}".format(*row))

# the same seed gives the same run
assert run(config, seed=1) == result
