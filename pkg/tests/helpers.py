"""Small hand-built networks and independent oracles shared by the tests."""
from __future__ import annotations

import itertools

import networkx as nx
import numpy as np

from vnembed.netmodel import (SubstrateLink, SubstrateNetwork, SubstrateNode, VirtualLink,
                              VirtualNetworkRequest)


def substrate(nodes, links, domains=None):
    """nodes: [(cpu, price, delay, plr)], links: [(a, b, bw, price, delay)]."""
    domains = domains or [0] * len(nodes)
    ns = [SubstrateNode(i, domains[i], cpu, cpu, price, delay, plr)
          for i, (cpu, price, delay, plr) in enumerate(nodes)]
    ls = [SubstrateLink(i, (a, b), bw, bw, price, delay) for i, (a, b, bw, price, delay) in enumerate(links)]
    return SubstrateNetwork(ns, ls)


def vnr(cpu, links, vid=0, arrival=0.0, lifetime=1000.0):
    """links: [(a, b, bw)]."""
    return VirtualNetworkRequest(list(cpu), [VirtualLink((a, b), bw) for a, b, bw in links],
                                 arrival=arrival, lifetime=lifetime, id=vid)


def line(n, cpu=100, bw=100, price=1.0):
    return substrate([(cpu, price, 1.0, 0.01)] * n,
                     [(i, i + 1, bw, price, 1.0) for i in range(n - 1)])


def random_small_substrate(rng, n, p=0.5, bw=(1, 20), price=(1.0, 10.0), cpu=(1, 20)):
    """Connected random graph with integer bandwidth and float prices."""
    while True:
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(pairs)
        if nx.is_connected(g):
            break
    nodes = [(int(rng.integers(cpu[0], cpu[1] + 1)), float(rng.uniform(*price)), 1.0, 0.1)
             for _ in range(n)]
    links = [(a, b, int(rng.integers(bw[0], bw[1] + 1)), float(rng.uniform(*price)),
              float(rng.uniform(1, 5))) for a, b in pairs]
    return substrate(nodes, links)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


# -- oracles -------------------------------------------------------------------

def brute_force_min_weight(s: SubstrateNetwork, weights, src, dst):
    """Minimum total weight over every simple path, via networkx enumeration."""
    g = nx.Graph()
    g.add_nodes_from(range(s.num_nodes))
    for l in s.links:
        if np.isfinite(weights[l.id]):
            g.add_edge(*l.endpoints, id=l.id)
    best = None
    for nodes in nx.all_simple_paths(g, src, dst):
        w = sum(weights[g.edges[a, b]["id"]] for a, b in zip(nodes, nodes[1:]))
        best = w if best is None or w < best else best
    return best


def brute_force_weights(s: SubstrateNetwork, bw_demand, lam, free=None):
    """Load-balanced weights recomputed directly from the per-link definition."""
    free = np.array([l.bw_free for l in s.links]) if free is None else np.asarray(free)
    cap = np.array([l.bw_capacity for l in s.links])
    used = cap - free
    mean = used.mean() if used.size else 0.0
    peak = used.max() if used.size else 0.0
    out = []
    for i, l in enumerate(s.links):
        if free[i] < bw_demand:
            out.append(np.inf)
        elif lam is not None and used[i] > mean:
            out.append(l.unit_price * (1 + lam * (used[i] - mean) / (peak - mean)))
        else:
            out.append(l.unit_price)
    return np.array(out)


def exhaustive_optimum(s: SubstrateNetwork, v: VirtualNetworkRequest, score):
    """Lowest ``score(genes)`` over every injective CPU-feasible assignment."""
    best = None
    for genes in itertools.permutations(range(s.num_nodes), v.num_nodes):
        if any(v.cpu_demands[k] > s.nodes[g].cpu_free for k, g in enumerate(genes)):
            continue
        val = score(genes)
        best = val if best is None or val < best else best
    return best


def numeric_grad(f, x, eps=1e-6):
    """Central finite differences of scalar ``f`` over array ``x`` (perturbed in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + eps
        fp = f()
        x[idx] = old - eps
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * eps)
    return g


def logistic_regression_accuracy(x, y, iters=3000, lr=0.5):
    """Plain gradient-descent logistic regression; returns training accuracy."""
    xb = np.hstack([x, np.ones((len(x), 1))])
    w = np.zeros(xb.shape[1])
    for _ in range(iters):
        p = 1 / (1 + np.exp(-xb @ w))
        w -= lr * xb.T @ (p - y) / len(y)
    return float(np.mean(((xb @ w) > 0) == (y == 1)))
