"""Discrete-event simulation of request arrivals and expiries.

Each arrival runs node mapping then link mapping.  If link mapping fails the
request gets one remapping attempt: a fresh node solve that starts without
the failed assignment, with the partial link paths offered for reuse.
Metrics are snapshotted at the end of every 100-time-unit bucket.

Wall-clock solver time is kept out of the CSV output so that repeated runs
produce byte-identical CSV files; it is reported in the JSON summary.
"""
from __future__ import annotations

import csv
import heapq
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import RaterConfig, RunConfig
from .errors import LinkMappingError, NodeMappingError
from .fitness.features import PlanEvaluator, synth_ratings
from .fitness.net import FitnessNet, holdout_error, train
from .hfpa.solver import NodeSolver, SolverParams
from .linkmap import RouteCache, map_links
from .netmodel import (EmbeddingPlan, SubstrateNetwork, VirtualNetworkRequest, allocate,
                       qos_totals, quotation, release, revenue_and_cost)
from .topogen import ArrivalSchedule, ScenarioConfig, gen_schedule, gen_substrate, gen_vnr

BUCKET = 100.0
SUMMARY_SCHEMA = "vnembed.summary/1"
METRICS_CSV_SCHEMA = "vnembed.metrics/1"
METRIC_NAMES = ("arrivals", "accepted", "refused", "active", "acceptance_ratio",
                "acceptance_ratio_literal", "revenue_cost_ratio", "average_quotation",
                "average_delay", "average_plr", "link_load_variance")


@dataclass
class SimState:
    substrate: SubstrateNetwork
    active: dict[int, tuple[VirtualNetworkRequest, EmbeddingPlan, float]] = field(default_factory=dict)
    arrivals: int = 0
    accepted: int = 0
    refused: int = 0
    sum_quotation: float = 0.0
    sum_delay: float = 0.0
    sum_plr: float = 0.0
    sum_revenue: float = 0.0
    sum_cost: float = 0.0
    sum_runtime_ms: float = 0.0


@dataclass
class MetricsReport:
    buckets: list[dict]
    final: dict
    average_runtime_ms: float
    records: list[dict] = field(default_factory=list)


def _ratio(a, b):
    return a / b if b else math.nan


def link_load_variance(s: SubstrateNetwork) -> float:
    """Population variance of consumed bandwidth over all substrate links."""
    used = s.link_usage().astype(float)
    if used.size == 0:
        return 0.0
    mu = used.sum() / used.size
    return float(((used - mu) ** 2).sum() / used.size)


def compute_metrics(state: SimState) -> dict:
    acc, ref = state.accepted, state.refused
    if ref:
        literal = acc / ref
    else:
        literal = math.inf if acc else math.nan
    return {
        "arrivals": state.arrivals,
        "accepted": acc,
        "refused": ref,
        "active": len(state.active),
        "acceptance_ratio": _ratio(acc, acc + ref),
        "acceptance_ratio_literal": literal,
        "revenue_cost_ratio": _ratio(state.sum_revenue, state.sum_cost),
        "average_quotation": _ratio(state.sum_quotation, acc),
        "average_delay": _ratio(state.sum_delay, acc),
        "average_plr": _ratio(state.sum_plr, acc),
        "link_load_variance": link_load_variance(state.substrate),
    }


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


def train_rater(s: SubstrateNetwork, scenario: ScenarioConfig, rc: RaterConfig, seed: int,
                lambda_weight: float | None = 2.0) -> FitnessNet:
    """Fit a rating network on synthetic ratings drawn for a few sample requests."""
    data = []
    for i in range(rc.training_vnrs):
        v = gen_vnr(scenario, _derive_seed(seed, 11, i))
        data += synth_ratings(s, v, rc.samples_per_vnr, _derive_seed(seed, 12, i),
                              n=rc.rating_levels, lambda_weight=lambda_weight)
    best, best_err = None, math.inf
    for r in range(max(1, rc.restarts)):
        net = FitnessNet.init(np.random.default_rng(_derive_seed(seed, 13, r)), n_hidden=rc.hidden,
                              learning_factor=rc.learning_factor, rating_levels=rc.rating_levels,
                              mode=rc.mode)
        net = train(net, data, rc.epochs, mode=rc.mode, seed=_derive_seed(seed, 14, r))
        err = holdout_error(net, data)
        if err < best_err:
            best, best_err = net, err
    return best


def embed_request(s: SubstrateNetwork, v: VirtualNetworkRequest, params: SolverParams,
                  rater: FitnessNet | None, lambda_weight: float | None = 2.0,
                  remap: bool = True) -> EmbeddingPlan | None:
    """Node then link mapping with one optional remapping attempt; None if refused."""
    evaluator = PlanEvaluator(s, v, RouteCache(s, lambda_weight), coeff=params.fitness_coeff)
    try:
        best = NodeSolver(s, v, params, rater, evaluator=evaluator).run()
    except NodeMappingError:
        return None
    try:
        return EmbeddingPlan(best.genes, map_links(s, v, best.genes, lambda_weight))
    except LinkMappingError as err:
        if not remap:
            return None
        partial = err.partial
    retry = replace(params, rng_seed=_derive_seed(params.rng_seed, 1))
    try:
        best = NodeSolver(s, v, retry, rater, evaluator=evaluator, exclude=[best.genes]).run()
        return EmbeddingPlan(best.genes, map_links(s, v, best.genes, lambda_weight, prior=partial))
    except (NodeMappingError, LinkMappingError):
        return None


def run_scenario(cfg: ScenarioConfig, solver: SolverParams, rater: FitnessNet | None = None, *,
                 lambda_weight: float | None = 2.0, remap: bool = True,
                 substrate: SubstrateNetwork | None = None,
                 schedule: ArrivalSchedule | None = None) -> MetricsReport:
    """Replay the arrival schedule over the substrate and collect metrics.

    ``substrate`` is mutated in place when given; once the run returns every
    request has expired and been released.
    """
    s = substrate if substrate is not None else gen_substrate(cfg)
    sched = schedule if schedule is not None else gen_schedule(cfg)
    state = SimState(s)
    queue = []
    for seq, ev in enumerate(sched.events):
        heapq.heappush(queue, (ev.time, 1, seq, ev.vnr))
    seq = len(sched.events)
    n_buckets = math.ceil(cfg.horizon / BUCKET)
    bucket_ends = [BUCKET * (b + 1) for b in range(n_buckets)]
    buckets, runtimes = [], []
    records = []
    nb = 0

    def flush_until(t):
        nonlocal nb
        while nb < n_buckets and bucket_ends[nb] < t:
            snap = compute_metrics(state)
            snap["time"] = bucket_ends[nb]
            buckets.append(snap)
            runtimes.append(_ratio(state.sum_runtime_ms, state.arrivals))
            nb += 1

    while queue:
        t, kind, _, payload = heapq.heappop(queue)
        flush_until(t)
        if kind == 0:
            v, plan = state.active.pop(payload)[:2]
            release(s, v, plan)
            continue
        v = payload
        params = replace(solver, rng_seed=_derive_seed(solver.rng_seed, v.id))
        t0 = time.perf_counter()
        plan = embed_request(s, v, params, rater, lambda_weight, remap)
        state.sum_runtime_ms += (time.perf_counter() - t0) * 1000.0
        state.arrivals += 1
        rec = {"id": v.id, "time": t, "accepted": plan is not None}
        if plan is None:
            state.refused += 1
        else:
            allocate(s, v, plan)
            q = quotation(s, v, plan)
            d, plr = qos_totals(s, plan)
            rev, cost = revenue_and_cost(v, plan)
            state.accepted += 1
            state.sum_quotation += q
            state.sum_delay += d
            state.sum_plr += plr
            state.sum_revenue += rev
            state.sum_cost += cost
            rec.update(quotation=q, delay=d, plr=plr, revenue=rev, cost=cost,
                       nodes=list(plan.node_assignment))
            expiry = t + v.lifetime
            state.active[v.id] = (v, plan, expiry)
            heapq.heappush(queue, (expiry, 0, seq, v.id))
            seq += 1
        records.append(rec)
    flush_until(math.inf)
    if buckets:
        final = dict(buckets[-1])
    else:
        final = compute_metrics(state)
        final["time"] = 0.0
    return MetricsReport(buckets, final, _ratio(state.sum_runtime_ms, state.arrivals),
                         records)


def run_config(cfg: RunConfig, seed: int, rater: FitnessNet | None = None,
               substrate: SubstrateNetwork | None = None) -> MetricsReport:
    """Run ``cfg`` with the scenario and solver seeds replaced by ``seed``."""
    scenario = ScenarioConfig.from_dict({**cfg.scenario.to_dict(), "rng_seed": seed})
    solver = replace(cfg.solver, rng_seed=_derive_seed(seed, 2))
    s = substrate if substrate is not None else gen_substrate(scenario)
    if rater is None and not solver.baseline_mode and solver.user_weight > 0:
        rater = train_rater(s, scenario, cfg.rater, _derive_seed(seed, 3), cfg.lambda_weight)
    return run_scenario(scenario, solver, rater, lambda_weight=cfg.lambda_weight, remap=cfg.remap,
                        substrate=s)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def write_metrics_csv(path, report: MetricsReport):
    """One row per bucket per metric; empty value where an average is undefined."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "metric", "value"])
        for snap in report.buckets:
            for name in METRIC_NAMES:
                w.writerow([_fmt(snap["time"]), name, _fmt(snap[name])])


def read_metrics_csv(path) -> list[tuple[float, str, float]]:
    rows = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            val = float(row["value"]) if row["value"] != "" else math.nan
            rows.append((float(row["time"]), row["metric"], val))
    return rows


def _json_value(x):
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return None if math.isnan(x) else "inf"
    return x


def summary_dict(report: MetricsReport) -> dict:
    return {"schema": SUMMARY_SCHEMA,
            "final": {k: _json_value(v) for k, v in report.final.items()},
            "average_runtime_ms": _json_value(report.average_runtime_ms),
            "buckets": len(report.buckets)}


def write_summary_json(path, report: MetricsReport):
    Path(path).write_text(json.dumps(summary_dict(report), indent=2, sort_keys=True) + "\n")
