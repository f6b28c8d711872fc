"""Seeded random substrates, virtual network requests and arrival schedules.

The substrate generator is an Erdos-Renyi graph per domain with guaranteed
cross-domain links (one per ordered domain pair, plus sparse extras), a stand-in for a transit-stub topology tool.  Resource
capacities and demands are drawn as integers; prices, delays and loss rates
as floats.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import GenerationError
from .netmodel import (SubstrateLink, SubstrateNetwork, SubstrateNode, VirtualLink,
                       VirtualNetworkRequest)

SCHEDULE_SCHEMA = "vnembed.schedule/1"
_MAX_REGEN = 100


@dataclass
class ScenarioConfig:
    domain_count: int = 4
    nodes_per_domain: int = 30
    cpu_range: tuple[int, int] = (100, 300)
    node_delay_range: tuple[float, float] = (1.0, 5.0)
    link_delay_range: tuple[float, float] = (1.0, 5.0)
    plr_range: tuple[float, float] = (0.01, 0.5)
    unit_price_range: tuple[float, float] = (1.0, 10.0)
    intra_bw_range: tuple[int, int] = (1000, 3000)
    inter_bw_range: tuple[int, int] = (3000, 6000)
    connect_prob: float = 0.5
    vn_node_range: tuple[int, int] = (5, 10)
    vn_demand_range: tuple[int, int] = (1, 10)
    arrival_mean_per_100: float = 10.0
    vn_lifetime: float = 1000.0
    horizon: float = 5000.0
    rng_seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            if f.name.endswith("_range"):
                lo, hi = getattr(self, f.name)
                if lo > hi:
                    raise ValueError(f"{f.name} is empty: {lo} > {hi}")
                setattr(self, f.name, (lo, hi))
        if not 0 < self.connect_prob <= 1:
            raise ValueError("connect_prob must be in (0, 1]")
        if self.domain_count < 1 or self.nodes_per_domain < 1:
            raise ValueError("need at least one domain with one node")
        if self.vn_node_range[0] < 1:
            raise ValueError("virtual networks need at least one node")
        if self.arrival_mean_per_100 < 0 or self.horizon < 0 or self.vn_lifetime <= 0:
            raise ValueError("rates, horizon and lifetime must be non-negative")

    @classmethod
    def desk(cls, **overrides) -> ScenarioConfig:
        """Small scenario: 2 domains of 10 nodes over 5000 time units."""
        base = dict(domain_count=2, nodes_per_domain=10, horizon=5000.0)
        base.update(overrides)
        return cls(**base)

    def scaled(self, factor: float) -> ScenarioConfig:
        """Multiply substrate size (nodes per domain) and horizon by ``factor``."""
        data = self.to_dict()
        data["nodes_per_domain"] = max(2, int(round(self.nodes_per_domain * factor)))
        data["horizon"] = self.horizon * factor
        return ScenarioConfig.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


@dataclass
class ArrivalEvent:
    time: float
    vnr: VirtualNetworkRequest

    @property
    def expiry(self) -> float:
        return self.time + self.vnr.lifetime


@dataclass
class ArrivalSchedule:
    events: list[ArrivalEvent]

    def __len__(self):
        return len(self.events)

    def to_dict(self) -> dict:
        return {"schema": SCHEDULE_SCHEMA,
                "events": [{"time": e.time, "expiry": e.expiry, "vnr": e.vnr.to_dict()}
                           for e in self.events]}

    @classmethod
    def from_dict(cls, data: dict) -> ArrivalSchedule:
        events = [ArrivalEvent(float(d["time"]), VirtualNetworkRequest.from_dict(d["vnr"]))
                  for d in data["events"]]
        return cls(events)


def _uniform(rng, rng_range):
    lo, hi = rng_range
    return float(rng.uniform(lo, hi)) if hi > lo else float(lo)


def _randint(rng, rng_range):
    lo, hi = rng_range
    return int(rng.integers(int(lo), int(hi) + 1))


def _draw_substrate(cfg: ScenarioConfig, rng) -> tuple[list[SubstrateNode], list[tuple[int, int, bool]]]:
    nodes = []
    for d in range(cfg.domain_count):
        for _ in range(cfg.nodes_per_domain):
            cap = _randint(rng, cfg.cpu_range)
            nodes.append(SubstrateNode(len(nodes), d, cap, cap,
                                       _uniform(rng, cfg.unit_price_range),
                                       _uniform(rng, cfg.node_delay_range),
                                       _uniform(rng, cfg.plr_range)))
    npd = cfg.nodes_per_domain
    edges = []
    for d in range(cfg.domain_count):
        base = d * npd
        for i in range(npd):
            for j in range(i + 1, npd):
                if rng.random() < cfg.connect_prob:
                    edges.append((base + i, base + j, False))
    # one guaranteed link per ordered domain pair, so two per unordered pair
    # when the domains have room for distinct endpoint pairs
    chosen = set()
    for da in range(cfg.domain_count):
        for db in range(cfg.domain_count):
            if da == db:
                continue
            for _ in range(_MAX_REGEN):
                a = da * npd + int(rng.integers(npd))
                b = db * npd + int(rng.integers(npd))
                pair = (min(a, b), max(a, b))
                if pair not in chosen:
                    break
            if pair not in chosen:
                chosen.add(pair)
                edges.append((pair[0], pair[1], True))
    extra_p = cfg.connect_prob / 10
    for da in range(cfg.domain_count):
        for db in range(da + 1, cfg.domain_count):
            for i in range(npd):
                for j in range(npd):
                    pair = (da * npd + i, db * npd + j)
                    if pair not in chosen and rng.random() < extra_p:
                        chosen.add(pair)
                        edges.append((pair[0], pair[1], True))
    return nodes, edges


def _components(n: int, edges) -> list[list[int]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b, _ in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for x in range(n):
        groups.setdefault(find(x), []).append(x)
    return [groups[k] for k in sorted(groups)]


def gen_substrate(cfg: ScenarioConfig) -> SubstrateNetwork:
    rng = np.random.default_rng(cfg.rng_seed)
    n = cfg.domain_count * cfg.nodes_per_domain
    for _ in range(_MAX_REGEN):
        nodes, edges = _draw_substrate(cfg, rng)
        comps = _components(n, edges)
        if len(comps) == 1:
            break
    else:
        # bridge each component to the first one with a single link
        for comp in comps[1:]:
            a = int(rng.choice(comps[0]))
            b = int(rng.choice(comp))
            edges.append((min(a, b), max(a, b), nodes[a].domain != nodes[b].domain))
        if len(_components(n, edges)) != 1:
            raise GenerationError("could not build a connected substrate")
    links = []
    for a, b, cross in edges:
        bw = _randint(rng, cfg.inter_bw_range if cross else cfg.intra_bw_range)
        links.append(SubstrateLink(len(links), (a, b), bw, bw,
                                   _uniform(rng, cfg.unit_price_range),
                                   _uniform(rng, cfg.link_delay_range)))
    return SubstrateNetwork(nodes, links, cfg.domain_count)


def gen_vnr(cfg: ScenarioConfig, seed, arrival: float = 0.0, vnr_id: int = 0) -> VirtualNetworkRequest:
    """Random connected request: a random spanning tree plus extra edges."""
    rng = np.random.default_rng(seed)
    n = _randint(rng, cfg.vn_node_range)
    cpu = [_randint(rng, cfg.vn_demand_range) for _ in range(n)]
    order = rng.permutation(n)
    pairs = set()
    for idx in range(1, n):
        parent = order[int(rng.integers(idx))]
        a, b = int(order[idx]), int(parent)
        pairs.add((min(a, b), max(a, b)))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in pairs and rng.random() < cfg.connect_prob:
                pairs.add((i, j))
    links = [VirtualLink(p, _randint(rng, cfg.vn_demand_range)) for p in sorted(pairs)]
    return VirtualNetworkRequest(cpu, links, arrival=arrival, lifetime=cfg.vn_lifetime, id=vnr_id)


def gen_schedule(cfg: ScenarioConfig) -> ArrivalSchedule:
    """Poisson arrivals per 100-unit window, uniform inside each window."""
    rng = np.random.default_rng([cfg.rng_seed, 1])
    raw = []
    windows = math.ceil(cfg.horizon / 100.0)
    for w in range(windows):
        lo = w * 100.0
        hi = min(lo + 100.0, cfg.horizon)
        count = int(rng.poisson(cfg.arrival_mean_per_100)) if cfg.arrival_mean_per_100 > 0 else 0
        times = np.sort(rng.uniform(lo, hi, size=count))
        for t in times:
            raw.append((float(t), int(rng.integers(2**63 - 1))))
    raw.sort(key=lambda x: x[0])
    events = [ArrivalEvent(t, gen_vnr(cfg, seed, arrival=t, vnr_id=i))
              for i, (t, seed) in enumerate(raw)]
    return ArrivalSchedule(events)
