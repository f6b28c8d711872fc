"""The two small mechanisms inside the node mapper, shown in isolation.

A logistic-map sequence at u=4 turns into 0/1 crossover masks, and the
life-cycle rule decides how many iterations an individual may live.

    python3 demos/chaos_and_lifespan.py
"""
import numpy as np

from vnembed.hfpa.chaos import ChaosState, admissible_seed, chaos_mask, logistic_sequence
from vnembed.hfpa.operators import Individual, chaos_crossover, lifespan_of

state = ChaosState(admissible_seed(np.random.default_rng(0)))
print(f"seed x0 = {state.x:.6f}")
for _ in range(4):
    mask, state = chaos_mask(6, state)
    print("mask", mask.tolist())

seq, _ = logistic_sequence(ChaosState(0.3), 10_000)
print("decile counts", np.histogram(seq, bins=10, range=(0, 1))[0].tolist())

a, b = Individual((1, 3, 6)), Individual((4, 1, 2))
print("crossover with mask [0,1,0]:", [c.genes for c in chaos_crossover(a, b, [0, 1, 0])])

# fitness shares 0.5x, 1x and 2x the population average
for m in (20, 25, 50):
    spans = [lifespan_of(share * 10.0, 100.0, 10, m) for share in (0.5, 1.0, 2.0)]
    print(f"M={m:>2}: lifespans for 0.5x/1x/2x average fitness -> {spans}")
