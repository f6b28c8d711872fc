"""Raw plan metrics, population-normalised features and synthetic ratings."""
from __future__ import annotations

import csv
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import GenerationError
from ..linkmap import RouteCache
from ..netmodel import SubstrateNetwork, VirtualNetworkRequest
from .net import FEATURE_NAMES, base_fitness


@dataclass
class RatedSample:
    features: np.ndarray
    rating: int


_DENSE_LIMIT = 2_000_000


class PlanEvaluator:
    """Scores node assignments using provisional least-weight routes.

    A virtual link that cannot be routed is charged a penalty path that is
    worse than any simple path (total link price, total link delay, one hop
    per substrate node), so every assignment still gets a finite score.
    """

    def __init__(self, s: SubstrateNetwork, v: VirtualNetworkRequest, routes: RouteCache | None = None,
                 coeff: float = 1.0, lambda_weight: float | None = 2.0):
        self.s = s
        self.v = v
        self.routes = routes if routes is not None else RouteCache(s, lambda_weight)
        self.coeff = coeff
        self.cpu = np.array(v.cpu_demands, dtype=float)
        self.revenue = float(sum(v.cpu_demands) + sum(vl.bw_demand for vl in v.links))
        self._node_price = s.node_prices.tolist()
        self._used = self.routes.used.tolist()
        penalty = (float(s.link_prices.sum()), float(s.link_delays.sum()), s.num_nodes)
        tables = {}
        self._vl = []
        for vl in v.links:
            tab = self.routes.table(vl.bw_demand)
            if id(tab) not in tables:
                ok = tab.reachable
                price = np.where(ok, tab.price, penalty[0])
                tables[id(tab)] = (tab, price, np.where(ok, tab.delay, penalty[1]),
                                   np.where(ok, tab.hops, penalty[2]), price.tolist())
            a, b = vl.endpoints
            self._vl.append((a, b, vl.bw_demand) + tables[id(tab)])
        self._fit: dict[tuple, float] = {}
        self._var: dict[tuple, float] = {}
        self._incidence: dict[int, np.ndarray] = {}
        self._grouped = None
        self._rows: dict[tuple, np.ndarray] = {}
        self.evaluations = 0

    def quotation(self, genes: Sequence[int]) -> float:
        cpu = self.v.cpu_demands
        np_ = self._node_price
        total = 0.0
        for k, g in enumerate(genes):
            total += cpu[k] * np_[g]
        for a, b, bw, _, _, _, _, price in self._vl:
            total += bw * price[genes[a]][genes[b]]
        return total

    def fitness(self, genes: Sequence[int]) -> float:
        key = tuple(genes)
        f = self._fit.get(key)
        if f is None:
            self.evaluations += 1
            f = base_fitness(self.quotation(key), self.coeff)
            self._fit[key] = f
        return f

    def routable(self, genes: Sequence[int]) -> bool:
        return all(tab.links[genes[a]][genes[b]] is not None for a, b, _, tab, *_ in self._vl)

    def _load_variance(self, genes: tuple) -> float:
        out = self._var.get(genes)
        if out is not None:
            return out
        load: dict[int, int] = {}
        for a, b, bw, tab, *_ in self._vl:
            path = tab.links[genes[a]][genes[b]]
            if path is None:
                continue
            for li in path:
                load[li] = load.get(li, 0) + bw
        if load:
            used = self._used
            vals = [used[li] + ld for li, ld in load.items()]
            mu = sum(vals) / len(vals)
            out = sum((x - mu) ** 2 for x in vals) / len(vals)
        else:
            out = 0.0
        self._var[genes] = out
        return out

    def _groups(self):
        """Virtual links grouped by route table, as index/bandwidth arrays."""
        if self._grouped is None:
            by_tab: dict[int, list] = {}
            for a, b, bw, tab, _, dmat, hmat, _ in self._vl:
                by_tab.setdefault(id(tab), [tab, dmat, hmat, []])[3].append((a, b, bw))
            self._grouped = []
            for tab, dmat, hmat, rows in by_tab.values():
                a, b, bw = (np.array(col) for col in zip(*rows))
                self._grouped.append((tab, dmat.ravel(), hmat.ravel(), a, b, bw.astype(float)))
        return self._grouped

    def raw_metrics_many(self, population: Sequence[Sequence[int]]) -> np.ndarray:
        """(rows, 5) matrix of [quotation, delay, plr, load variance, cost/revenue]."""
        keys = [tuple(g) for g in population]
        rows = self._rows
        missing = list(dict.fromkeys(k for k in keys if k not in rows))
        if missing:
            for k, row in zip(missing, self._compute_rows(missing)):
                rows[k] = row
        if not keys:
            return np.empty((0, 5))
        return np.array([rows[k] for k in keys])

    def _compute_rows(self, keys: list[tuple]) -> np.ndarray:
        G = np.array(keys, dtype=np.int64).reshape(len(keys), self.v.num_nodes)
        s = self.s
        n = s.num_nodes
        dense = n * n * s.num_links <= _DENSE_LIMIT
        delay = s.node_delays[G].sum(axis=1)
        plr = s.node_plrs[G].sum(axis=1)
        cost = np.full(len(keys), self.cpu.sum())
        load = np.zeros((len(keys), s.num_links)) if dense else None
        for tab, dflat, hflat, a, b, bw in self._groups():
            flat = G[:, a] * n + G[:, b]
            delay = delay + dflat[flat].sum(axis=1)
            cost = cost + hflat[flat] @ bw
            if dense:
                load += np.einsum("pvl,v->pl", self._incidence_of(tab)[flat], bw)
        out = np.empty((len(keys), 5))
        out[:, 0] = [self.fitness(k) for k in keys]
        out[:, 1] = delay
        out[:, 2] = plr
        if dense:
            out[:, 3] = self._variance_from_load(load)
        else:
            out[:, 3] = [self._load_variance(k) for k in keys]
        out[:, 4] = cost / self.revenue
        return out

    def _incidence_of(self, tab) -> np.ndarray:
        """(nodes*nodes, links) 0/1 matrix of the links on each pair's route."""
        inc = self._incidence.get(id(tab))
        if inc is None:
            n, L = self.s.num_nodes, self.s.num_links
            inc = np.zeros((n * n, L))
            for src, row in enumerate(tab.links):
                for dst, path in enumerate(row):
                    if path:
                        inc[src * n + dst, list(path)] = 1.0
            self._incidence[id(tab)] = inc
        return inc

    def _variance_from_load(self, load: np.ndarray) -> np.ndarray:
        on = load > 0
        cnt = on.sum(axis=1)
        vals = np.where(on, self.routes.used[None, :] + load, 0.0)
        safe = np.maximum(cnt, 1)
        mu = vals.sum(axis=1) / safe
        var = np.where(on, (vals - mu[:, None]) ** 2, 0.0).sum(axis=1) / safe
        return np.where(cnt > 0, var, 0.0)

    def raw_metrics(self, genes: Sequence[int]) -> np.ndarray:
        return self.raw_metrics_many([genes])[0]


def normalize_features(raw: np.ndarray) -> np.ndarray:
    """Per-column min-max scaling; constant columns map to 0.5."""
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    lo = raw.min(axis=0)
    span = raw.max(axis=0) - lo
    out = np.full(raw.shape, 0.5)
    ok = span > 0
    out[:, ok] = (raw[:, ok] - lo[ok]) / span[ok]
    return out


def extract_features(evaluator: PlanEvaluator, population: Sequence[Sequence[int]]) -> np.ndarray:
    """Feature matrix (one row per assignment) normalised over ``population``."""
    return normalize_features(evaluator.raw_metrics_many(population))


def oracle_scores(features: np.ndarray) -> np.ndarray:
    """Ground-truth multi-criteria score: equal-weight mean of the features."""
    return np.asarray(features, dtype=float).mean(axis=1)


def quantile_ratings(scores: np.ndarray, n: int) -> np.ndarray:
    """Rating 1..n by score quantile; equal scores share a rating."""
    scores = np.asarray(scores, dtype=float)
    below = np.searchsorted(np.sort(scores), scores, side="left")
    return (below * n // len(scores)) + 1


def draw_unused(pool: Sequence[int], used, rng, tries: int = 16):
    """Uniform draw from ``pool`` minus ``used``; None if nothing is left.

    Rejection sampling first, which is cheap while few candidates are taken,
    then an explicit filter.
    """
    size = len(pool)
    if not size:
        return None
    for _ in range(tries):
        g = pool[int(rng.random() * size)]
        if g not in used:
            return g
    rest = [c for c in pool if c not in used]
    return rest[int(rng.random() * len(rest))] if rest else None


def random_assignment(candidates: Sequence[Sequence[int]], rng, max_tries: int = 50):
    """Uniform random injective assignment from per-node candidate lists, or None."""
    k = len(candidates)
    for _ in range(max_tries):
        used = set()
        genes = []
        for pos in rng.permutation(k).tolist():
            g = draw_unused(candidates[pos], used, rng)
            if g is None:
                break
            used.add(g)
            genes.append((pos, g))
        else:
            out = [0] * k
            for pos, g in genes:
                out[pos] = g
            return tuple(out)
    return None


def cpu_candidates(s: SubstrateNetwork, v: VirtualNetworkRequest) -> list[list[int]]:
    free = s.cpu_free_array()
    return [np.flatnonzero(free >= c).tolist() for c in v.cpu_demands]


def synth_ratings(s: SubstrateNetwork, v: VirtualNetworkRequest, sample_count: int, seed,
                  n: int = 3, lambda_weight: float | None = 2.0) -> list[RatedSample]:
    """Random feasible plans rated 1..n by quantile of the oracle score."""
    if sample_count < n:
        raise ValueError("sample_count must be at least the number of rating levels")
    rng = np.random.default_rng(seed)
    cands = cpu_candidates(s, v)
    ev = PlanEvaluator(s, v, lambda_weight=lambda_weight)
    plans: dict[tuple, None] = {}
    misses = 0
    while len(plans) < sample_count:
        g = random_assignment(cands, rng)
        if g is None or g in plans:
            misses += 1
            if misses > 20 * sample_count + 100:
                raise GenerationError("substrate too small to draw enough distinct plans")
            continue
        plans[g] = None
    feats = extract_features(ev, list(plans))
    ratings = quantile_ratings(oracle_scores(feats), n)
    return [RatedSample(f, int(r)) for f, r in zip(feats, ratings)]


def write_dataset_csv(path, samples: Sequence[RatedSample]):
    path = Path(path)
    width = len(samples[0].features) if samples else len(FEATURE_NAMES)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(FEATURE_NAMES[:width]) + ["rating"])
        for smp in samples:
            w.writerow([repr(float(x)) for x in smp.features] + [smp.rating])


def read_dataset_csv(path) -> list[RatedSample]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        next(r)
        return [RatedSample(np.array([float(x) for x in row[:-1]]), int(row[-1])) for row in r]
