"""Command-line entry point.

    vnembed gen    --config desk --seeds 0 --out scen/
    vnembed train  --config desk --seeds 0 --out rater/
    vnembed run    --config desk --seeds 0-4 --solver bp-hfpa --out runs/hfpa
    vnembed report runs/hfpa --out runs/hfpa

Every ``run`` seed directory gets ``metrics.csv``, ``summary.json`` and a
``manifest.json`` holding the fully resolved configuration; passing that
manifest back as ``--config`` reproduces the run.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import VNEError
from .fitness.net import MODES, FitnessNet
from .sim import (METRIC_NAMES, _derive_seed, read_metrics_csv, run_config, train_rater,
                  write_metrics_csv, write_summary_json)
from .topogen import ScenarioConfig, gen_schedule, gen_substrate

MANIFEST_SCHEMA = "vnembed.manifest/1"
SOLVERS = ("bp-hfpa", "baseline-ga")


def parse_seeds(text: str) -> list[int]:
    """``"0,3,5-7"`` -> [0, 3, 5, 6, 7]."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-", 1))
            if hi < lo:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if any(x < 0 for x in seeds):
        raise ValueError("seeds must be non-negative")
    if not seeds:
        raise ValueError("no seeds given")
    return seeds


def resolve_config(args) -> RunConfig:
    cfg = _load(args.config)
    if args.scale != 1.0:
        cfg = replace(cfg, scenario=cfg.scenario.scaled(args.scale))
    if getattr(args, "bp_mode", None):
        cfg = replace(cfg, rater=replace(cfg.rater, mode=args.bp_mode))
    solver = cfg.solver
    if getattr(args, "solver", None):
        solver = replace(solver, baseline_mode=args.solver == "baseline-ga")
    if getattr(args, "invert_transfer", False):
        solver = replace(solver, invert_transfer=True)
    cfg = replace(cfg, solver=solver)
    if getattr(args, "no_load_balance", False):
        cfg = replace(cfg, lambda_weight=None)
    return cfg


def _load(path) -> RunConfig:
    p = Path(str(path))
    if p.suffix == ".json" and p.exists():
        data = json.loads(p.read_text())
        if data.get("schema") == MANIFEST_SCHEMA:
            return RunConfig.from_dict(data["config"])
    return load_config(path)


def _seed_dir(out: Path, seed: int) -> Path:
    d = out / f"seed-{seed}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _scenario_for(cfg: RunConfig, seed: int) -> ScenarioConfig:
    return ScenarioConfig.from_dict({**cfg.scenario.to_dict(), "rng_seed": seed})


def _write_json(path: Path, data):
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# -- subcommands ---------------------------------------------------------------

def cmd_gen(args) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    for seed in parse_seeds(args.seeds):
        sc = _scenario_for(cfg, seed)
        d = _seed_dir(out, seed)
        s = gen_substrate(sc)
        _write_json(d / "substrate.json", s.to_dict())
        _write_json(d / "schedule.json", gen_schedule(sc).to_dict())
        print(f"seed {seed}: {s.num_nodes} nodes, {s.num_links} links -> {d}")
    return 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = parse_seeds(args.seeds)[0]
    sc = _scenario_for(cfg, seed)
    net = train_rater(gen_substrate(sc), sc, cfg.rater, _derive_seed(seed, 3), cfg.lambda_weight)
    _write_json(out / "rater.json", net.to_dict())
    print(f"rater ({cfg.rater.mode}) -> {out / 'rater.json'}")
    return 0


def _run_one(cfg: RunConfig, seed: int, rater_path: str | None, out: Path, manifest: dict) -> dict:
    rater = None
    if rater_path:
        rater = FitnessNet.from_dict(json.loads(Path(rater_path).read_text()))
    report = run_config(cfg, seed, rater=rater)
    d = _seed_dir(out, seed)
    write_metrics_csv(d / "metrics.csv", report)
    write_summary_json(d / "summary.json", report)
    _write_json(d / "manifest.json", {**manifest, "seeds": [seed]})
    return report.final


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    seeds = parse_seeds(args.seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rater_path = None if args.rater in (None, "train-fresh") else args.rater
    if rater_path and not Path(rater_path).exists():
        raise FileNotFoundError(f"rater file not found: {rater_path}")
    manifest = {"schema": MANIFEST_SCHEMA, "version": __version__, "config_path": str(args.config),
                "output_dir": str(out), "seeds": seeds,
                "solver": "baseline-ga" if cfg.solver.baseline_mode else "bp-hfpa",
                "rater": rater_path or "train-fresh", "config": cfg.to_dict()}
    _write_json(out / "manifest.json", manifest)
    if args.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            finals = list(pool.map(_run_one, [cfg] * len(seeds), seeds, [rater_path] * len(seeds),
                                   [out] * len(seeds), [manifest] * len(seeds)))
    else:
        finals = [_run_one(cfg, seed, rater_path, out, manifest) for seed in seeds]
    for seed, final in zip(seeds, finals):
        print(f"seed {seed}: arrivals {final['arrivals']}, accepted {final['accepted']}, "
              f"average quotation {final['average_quotation']:.4g}")
    return 0


def merge_reports(csv_paths) -> tuple[list[dict], list[dict]]:
    """Mean, sample standard deviation and count per (time, metric) and for the final bucket."""
    cells = defaultdict(list)
    finals = defaultdict(list)
    for path in csv_paths:
        rows = read_metrics_csv(path)
        last = max((t for t, _, _ in rows), default=None)
        for t, name, value in rows:
            cells[(t, name)].append(value)
            if t == last:
                finals[name].append(value)

    def stats(values):
        vals = np.array([v for v in values if not math.isnan(v)])
        if vals.size == 0:
            return math.nan, math.nan, 0
        if (vals == vals[0]).all():
            return float(vals[0]), 0.0, int(vals.size)
        with np.errstate(invalid="ignore"):
            return float(vals.mean()), float(vals.std(ddof=1)), int(vals.size)

    order = {name: i for i, name in enumerate(METRIC_NAMES)}
    table = []
    for (t, name) in sorted(cells, key=lambda k: (k[0], order.get(k[1], len(order)), k[1])):
        mean, std, n = stats(cells[(t, name)])
        table.append({"time": t, "metric": name, "mean": mean, "std": std, "n": n})
    final = []
    for name in sorted(finals, key=lambda k: (order.get(k, len(order)), k)):
        mean, std, n = stats(finals[name])
        final.append({"metric": name, "mean": mean, "std": std, "n": n})
    return table, final


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return "" if math.isnan(x) else repr(float(x))


def cmd_report(args) -> int:
    paths = []
    for src in args.inputs:
        p = Path(src)
        paths += sorted(p.glob("seed-*/metrics.csv")) if p.is_dir() else [p]
    if not paths:
        raise FileNotFoundError("no metrics.csv files found under " + ", ".join(args.inputs))
    table, final = merge_reports(paths)
    out = Path(args.out) if args.out else (Path(args.inputs[0]) if Path(args.inputs[0]).is_dir()
                                           else Path("."))
    out.mkdir(parents=True, exist_ok=True)
    with (out / "report.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "metric", "mean", "std", "n"])
        for r in table:
            w.writerow([_fmt(r["time"]), r["metric"], _fmt(r["mean"]), _fmt(r["std"]), r["n"]])
    with (out / "final.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "mean", "std", "n"])
        for r in final:
            w.writerow([r["metric"], _fmt(r["mean"]), _fmt(r["std"]), r["n"]])
            print(f"{r['metric']:>26}  {r['mean']:.6g} +/- {r['std']:.3g}  (n={r['n']})")
    print(f"{len(paths)} runs merged -> {out / 'report.csv'}, {out / 'final.csv'}")
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vnembed", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, solver=False):
        p.add_argument("--config", default="defaults",
                       help="JSON config or manifest, or the built-ins 'defaults' / 'desk'")
        p.add_argument("--seeds", default="0", help="comma list with ranges, e.g. 0-19")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--scale", type=float, default=1.0,
                       help="multiply substrate size and horizon")
        p.add_argument("--bp-mode", choices=MODES, help="rating network training rule")
        if solver:
            p.add_argument("--solver", choices=SOLVERS, default="bp-hfpa")
            p.add_argument("--invert-transfer", action="store_true",
                           help="take the crossover branch when random < transfer_prob")
            p.add_argument("--no-load-balance", action="store_true",
                           help="route on plain unit prices")
            p.add_argument("--rater", default="train-fresh",
                           help="rater JSON from 'train', or 'train-fresh'")
            p.add_argument("--workers", type=int, default=1, help="seed runs in parallel")

    common(sub.add_parser("gen", help="write substrate and arrival schedule JSON"))
    common(sub.add_parser("train", help="train and save a rating network"))
    common(sub.add_parser("run", help="simulate one or more seeds"), solver=True)
    rep = sub.add_parser("report", help="merge per-seed metrics into mean/std tables")
    rep.add_argument("inputs", nargs="+", help="run directories or metrics.csv files")
    rep.add_argument("--out", help="directory for report.csv and final.csv")
    return parser


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "run": cmd_run, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (VNEError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"vnembed {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
