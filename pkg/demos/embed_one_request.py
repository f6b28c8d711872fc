"""Embed a single virtual network request by hand, step by step.

Builds the small two-domain substrate, draws one request, runs the node
mapper with and without a trained rating network, routes the virtual links
and prints what the plan costs.

    python3 demos/embed_one_request.py
"""
import numpy as np

from vnembed import (EmbeddingPlan, ScenarioConfig, SolverParams, allocate, check_constraints,
                     gen_substrate, gen_vnr, map_links, qos_totals, quotation, release,
                     revenue_and_cost, solve_nodes)
from vnembed.config import RaterConfig
from vnembed.sim import train_rater

cfg = ScenarioConfig.desk(rng_seed=7)
s = gen_substrate(cfg)
v = gen_vnr(cfg, seed=42)
print(f"substrate: {s.num_nodes} nodes, {s.num_links} links")
print(f"request:   {v.num_nodes} nodes, cpu {v.cpu_demands}, "
      f"{len(v.links)} links with bandwidth {[l.bw_demand for l in v.links]}")

# a rating network trained on synthetic ratings for this substrate
rater = train_rater(s, cfg, RaterConfig(epochs=100, restarts=2), seed=1)

params = SolverParams(pop_size=12, max_iters=40, rng_seed=3)
for label, net in (("plain quotation", None), ("with rater", rater)):
    best = solve_nodes(s, v, params, rater=net)
    print(f"\n{label}: nodes -> {best.genes}, provisional quotation {best.fitness:.2f}")

# route the links for the last assignment and check the full plan
paths = map_links(s, v, best.genes)
plan = EmbeddingPlan(best.genes, paths)
assert check_constraints(s, v, plan).ok
delay, plr = qos_totals(s, plan)
rev, cost = revenue_and_cost(v, plan)
print(f"routed quotation {quotation(s, v, plan):.2f}, delay {delay:.1f}, summed PLR {plr:.3f}, "
      f"revenue/cost {rev}/{cost}")
for i, path in sorted(paths.items()):
    print(f"  virtual link {i}: substrate links {list(path)}")

before = s.bw_free_array().copy()
allocate(s, v, plan)
print(f"bandwidth consumed: {int((before - s.bw_free_array()).sum())}")
release(s, v, plan)
assert np.array_equal(before, s.bw_free_array())
