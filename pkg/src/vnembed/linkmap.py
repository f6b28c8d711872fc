"""Least-weight link mapping with load-balancing link weights.

Link weight starts from the unit price.  Links whose consumption is above
the network mean get a surcharge proportional to how far they sit between
the mean and the most-loaded link.  Links without enough residual bandwidth
are excluded outright (infinite weight).  Ties between equal-weight paths
are broken by the lexicographically smallest node sequence.
"""
from __future__ import annotations

import heapq
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import LinkMappingError
from .netmodel import SubstrateNetwork, VirtualNetworkRequest

DEFAULT_LAMBDA_WEIGHT = 2.0


@dataclass
class WeightSnapshot:
    weights: np.ndarray  # per link; inf where excluded
    excluded: np.ndarray  # bool per link


def _check_lambda(lambda_weight):
    if lambda_weight is not None and not 0 < lambda_weight <= 2:
        raise ValueError("lambda_weight must lie in (0, 2] (or None to disable)")


def _surcharged(prices: np.ndarray, used: np.ndarray, lambda_weight) -> np.ndarray:
    weights = prices.astype(float).copy()
    if lambda_weight is None or used.size == 0:
        return weights
    mean = used.sum() / used.size
    peak = used.max()
    hot = used > mean
    if peak > mean and hot.any():
        extra = (used[hot] - mean) / (peak - mean)
        weights[hot] = weights[hot] * (1 + lambda_weight * extra)
    return weights


def balanced_weights(s: SubstrateNetwork, bw_demand: int, lambda_weight: float | None,
                     bw_free: np.ndarray | None = None) -> WeightSnapshot:
    """Effective link weights for routing a virtual link of ``bw_demand``.

    ``lambda_weight=None`` disables the load-balancing surcharge (weights are
    plain unit prices).  ``bw_free`` overrides the substrate's residuals, which
    lets callers route against a provisional ledger.
    """
    _check_lambda(lambda_weight)
    free = s.bw_free_array() if bw_free is None else np.asarray(bw_free)
    used = s.bw_capacity_array() - free
    weights = _surcharged(s.link_prices, used, lambda_weight)
    excluded = free < bw_demand
    weights[excluded] = math.inf
    return WeightSnapshot(weights, excluded)


def _dijkstra(s: SubstrateNetwork, weights: Sequence[float], src: int, dst: int | None = None):
    """Label-setting search keyed on (distance, node sequence).

    Returns {node: (distance, nodes, links)} for every settled node, stopping
    early once ``dst`` is settled.
    """
    adj = s._adj
    heap = [(0.0, (src,), ())]
    done = {}
    while heap:
        d, nodes, links = heapq.heappop(heap)
        u = nodes[-1]
        if u in done:
            continue
        done[u] = (d, nodes, links)
        if u == dst:
            break
        for w, li in adj[u]:
            if w in done:
                continue
            wt = weights[li]
            if wt == math.inf:
                continue
            heapq.heappush(heap, (d + wt, nodes + (w,), links + (li,)))
    return done


def least_weight_path(s: SubstrateNetwork, weights: Sequence[float], src: int,
                      dst: int) -> tuple[float, tuple[int, ...]] | None:
    """(total weight, link ids) of the least-weight path, or None if unreachable."""
    if src == dst:
        return 0.0, ()
    found = _dijkstra(s, weights, src, dst).get(dst)
    if found is None:
        return None
    return found[0], found[2]


def _path_fits(s, path, src, dst, demand, free) -> bool:
    cur = src
    seen = {src}
    for li in path:
        if not 0 <= li < s.num_links or free[li] < demand:
            return False
        a, b = s.links[li].endpoints
        if cur == a:
            cur = b
        elif cur == b:
            cur = a
        else:
            return False
        if cur in seen:
            return False
        seen.add(cur)
    return cur == dst and len(path) > 0


def map_links(s: SubstrateNetwork, v: VirtualNetworkRequest, assignment: Sequence[int],
              lambda_weight: float | None = DEFAULT_LAMBDA_WEIGHT,
              prior: Mapping[int, Sequence[int]] | None = None) -> dict[int, tuple[int, ...]]:
    """Route every virtual link of ``v`` given a node assignment.

    Links are handled in non-increasing bandwidth order.  A path from
    ``prior`` is kept if it still connects the right endpoints with enough
    bandwidth.  Bandwidth is reserved on a private ledger as links are
    routed, so the substrate itself is never modified; on failure a
    :class:`LinkMappingError` carrying the partial result is raised.
    """
    _check_lambda(lambda_weight)
    free = s.bw_free_array()
    cap = s.bw_capacity_array()
    order = sorted(range(len(v.links)), key=lambda i: -v.links[i].bw_demand)
    paths: dict[int, tuple[int, ...]] = {}
    for i in order:
        vl = v.links[i]
        src, dst = assignment[vl.endpoints[0]], assignment[vl.endpoints[1]]
        old = None if prior is None else prior.get(i)
        if old is not None and _path_fits(s, old, src, dst, vl.bw_demand, free):
            path = tuple(old)
        else:
            weights = _surcharged(s.link_prices, cap - free, lambda_weight)
            weights[free < vl.bw_demand] = math.inf
            found = least_weight_path(s, weights, src, dst)
            if found is None:
                raise LinkMappingError(f"no path for virtual link {i} ({src}->{dst}, "
                                       f"bw {vl.bw_demand})", vlink=i, partial=paths)
            path = found[1]
        for li in path:
            free[li] -= vl.bw_demand
        paths[i] = path
    return paths


@dataclass(frozen=True)
class Route:
    links: tuple[int, ...]
    price: float  # sum of link unit prices
    delay: float

    @property
    def hops(self) -> int:
        return len(self.links)


@dataclass
class PairTable:
    """All-pairs least-weight routes under one exclusion mask.

    ``price``/``delay``/``hops`` are (nodes, nodes) arrays indexed
    [source, destination]; ``reachable`` marks pairs with a route.
    """

    links: list[list[tuple[int, ...] | None]]
    price: np.ndarray
    delay: np.ndarray
    hops: np.ndarray
    reachable: np.ndarray


class RouteCache:
    """All-pairs routes against a fixed residual snapshot, one table per exclusion mask.

    Used while scoring candidate node assignments, where running a full
    :func:`map_links` per candidate would be too slow.  Routes ignore the
    bandwidth a request's own earlier links would reserve.
    """

    def __init__(self, s: SubstrateNetwork, lambda_weight: float | None = DEFAULT_LAMBDA_WEIGHT):
        _check_lambda(lambda_weight)
        self.s = s
        self.free = s.bw_free_array()
        self.used = s.bw_capacity_array() - self.free
        self.base = _surcharged(s.link_prices, self.used, lambda_weight)
        self._masks: dict[int, bytes] = {}
        self._tables: dict[bytes, PairTable] = {}

    def table(self, demand: int) -> PairTable:
        key = self._masks.get(demand)
        if key is None:
            mask = self.free < demand
            key = mask.tobytes()
            self._masks[demand] = key
            if key not in self._tables:
                w = self.base.copy()
                w[mask] = math.inf
                self._tables[key] = self._build(w.tolist())
        return self._tables[key]

    def _build(self, weights) -> PairTable:
        s = self.s
        n = s.num_nodes
        prices = s.link_prices.tolist()
        delays = s.link_delays.tolist()
        links = [[None] * n for _ in range(n)]
        price = np.zeros((n, n))
        delay = np.zeros((n, n))
        hops = np.zeros((n, n), dtype=np.int64)
        reach = np.zeros((n, n), dtype=bool)
        for src in range(n):
            for dst, (_, _, path) in _dijkstra(s, weights, src).items():
                links[src][dst] = path
                price[src, dst] = sum(prices[li] for li in path)
                delay[src, dst] = sum(delays[li] for li in path)
                hops[src, dst] = len(path)
                reach[src, dst] = True
        return PairTable(links, price, delay, hops, reach)

    def route(self, src: int, dst: int, demand: int) -> Route | None:
        tab = self.table(demand)
        path = tab.links[src][dst]
        if path is None:
            return None
        return Route(path, float(tab.price[src, dst]), float(tab.delay[src, dst]))
