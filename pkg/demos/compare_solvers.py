"""Short side-by-side simulation of the hybrid solver, the GA baseline and
routing without load balancing.

Uses the desk scenario cut to 1500 time units so it finishes in well under
a minute.  For the full 20-seed comparison use the CLI:

    vnembed run --config desk --seeds 0-19 --out runs/hfpa
    vnembed run --config desk --seeds 0-19 --solver baseline-ga --out runs/ga
    vnembed report runs/hfpa

    python3 demos/compare_solvers.py [seed]
"""
import sys
from dataclasses import replace

from vnembed import RunConfig, ScenarioConfig, run_config

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
base = replace(RunConfig.desk(), scenario=ScenarioConfig.desk(horizon=1500.0))
variants = {
    "bp-hfpa": base,
    "baseline-ga": replace(base, solver=replace(base.solver, baseline_mode=True)),
    "bp-hfpa, no load balancing": replace(base, lambda_weight=None),
}

print(f"{'configuration':<28}{'accept':>8}{'avg quote':>11}{'rev/cost':>10}{'link var':>11}")
for name, cfg in variants.items():
    f = run_config(cfg, seed).final
    print(f"{name:<28}{f['acceptance_ratio']:>8.3f}{f['average_quotation']:>11.2f}"
          f"{f['revenue_cost_ratio']:>10.3f}{f['link_load_variance']:>11.0f}")
