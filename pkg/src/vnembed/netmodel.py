"""Substrate / virtual network data model and per-plan accounting.

Resources (CPU, bandwidth) are integer units so that allocate/release pairs
restore residuals exactly.  Prices, delays and loss rates are floats.

JSON layout of a substrate network (``SubstrateNetwork.to_dict``)::

    {"schema": "vnembed.substrate/1",
     "domain_count": 4,
     "nodes": [{"id": 0, "domain": 0, "cpu_capacity": 250, "cpu_free": 250,
                "unit_price": 3.2, "delay": 1.7, "plr": 0.04}, ...],
     "links": [{"id": 0, "endpoints": [0, 5], "bw_capacity": 1800,
                "bw_free": 1800, "unit_price": 6.1, "delay": 2.2}, ...]}
"""
from __future__ import annotations

import copy
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import AllocationError, IncompletePlanError, InvalidPathError

SUBSTRATE_SCHEMA = "vnembed.substrate/1"
VNR_SCHEMA = "vnembed.vnr/1"


@dataclass
class SubstrateNode:
    id: int
    domain: int
    cpu_capacity: int
    cpu_free: int
    unit_price: float
    delay: float
    plr: float


@dataclass
class SubstrateLink:
    id: int
    endpoints: tuple[int, int]
    bw_capacity: int
    bw_free: int
    unit_price: float
    delay: float

    def __post_init__(self):
        a, b = self.endpoints
        if a == b:
            raise ValueError(f"self-loop on node {a}")
        self.endpoints = (min(a, b), max(a, b))

    def other(self, node: int) -> int:
        a, b = self.endpoints
        if node == a:
            return b
        if node == b:
            return a
        raise InvalidPathError(f"link {self.id} is not incident to node {node}")


class SubstrateNetwork:
    """Undirected multi-domain substrate graph with residual ledgers.

    Node ids are contiguous within each domain and domains are concatenated,
    so neighbouring ids usually share a domain.  Only :func:`allocate` and
    :func:`release` mutate the residual fields.
    """

    def __init__(self, nodes: Sequence[SubstrateNode], links: Sequence[SubstrateLink],
                 domain_count: int | None = None):
        self.nodes = list(nodes)
        self.links = list(links)
        self.domain_count = (domain_count if domain_count is not None
                             else len({n.domain for n in self.nodes}))
        self._allocations: dict[int, tuple] = {}
        self._index()

    def _index(self):
        n = len(self.nodes)
        self._pair: dict[tuple[int, int], int] = {}
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise ValueError(f"node at position {i} has id {node.id}")
        for i, link in enumerate(self.links):
            if link.id != i:
                raise ValueError(f"link at position {i} has id {link.id}")
            a, b = link.endpoints
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"link {i} references unknown node")
            if (a, b) in self._pair:
                raise ValueError(f"parallel link between {a} and {b}")
            self._pair[(a, b)] = i
            adj[a].append((b, i))
            adj[b].append((a, i))
        for row in adj:
            row.sort()
        self._adj = adj
        self.link_prices = np.array([l.unit_price for l in self.links], dtype=float)
        self.link_delays = np.array([l.delay for l in self.links], dtype=float)
        self.node_prices = np.array([x.unit_price for x in self.nodes], dtype=float)
        self.node_delays = np.array([x.delay for x in self.nodes], dtype=float)
        self.node_plrs = np.array([x.plr for x in self.nodes], dtype=float)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_links(self) -> int:
        return len(self.links)

    def neighbors(self, node: int) -> list[tuple[int, int]]:
        """(neighbour, link id) pairs sorted by neighbour id."""
        return self._adj[node]

    def link_between(self, a: int, b: int) -> SubstrateLink | None:
        i = self._pair.get((min(a, b), max(a, b)))
        return None if i is None else self.links[i]

    def cpu_free_array(self) -> np.ndarray:
        return np.array([x.cpu_free for x in self.nodes], dtype=np.int64)

    def bw_free_array(self) -> np.ndarray:
        return np.array([l.bw_free for l in self.links], dtype=np.int64)

    def bw_capacity_array(self) -> np.ndarray:
        return np.array([l.bw_capacity for l in self.links], dtype=np.int64)

    def link_usage(self) -> np.ndarray:
        """Consumed bandwidth per link."""
        return self.bw_capacity_array() - self.bw_free_array()

    def residuals(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (tuple(x.cpu_free for x in self.nodes), tuple(l.bw_free for l in self.links))

    def capacities(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (tuple(x.cpu_capacity for x in self.nodes), tuple(l.bw_capacity for l in self.links))

    @property
    def active_allocations(self) -> int:
        return len(self._allocations)

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w, _ in self._adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.nodes)

    def validate(self):
        for x in self.nodes:
            if not 0 <= x.cpu_free <= x.cpu_capacity:
                raise ValueError(f"node {x.id}: cpu_free out of range")
            if not 0.0 <= x.plr <= 1.0:
                raise ValueError(f"node {x.id}: plr out of range")
            if x.unit_price <= 0:
                raise ValueError(f"node {x.id}: unit_price must be positive")
        for l in self.links:
            if not 0 <= l.bw_free <= l.bw_capacity:
                raise ValueError(f"link {l.id}: bw_free out of range")
            if l.unit_price <= 0:
                raise ValueError(f"link {l.id}: unit_price must be positive")
        ids = [x.domain for x in self.nodes]
        if ids != sorted(ids):
            raise ValueError("node ids are not contiguous per domain")

    def copy(self) -> SubstrateNetwork:
        """Deep copy without the allocation ledger."""
        return SubstrateNetwork(copy.deepcopy(self.nodes), copy.deepcopy(self.links),
                                self.domain_count)

    def to_dict(self) -> dict:
        return {
            "schema": SUBSTRATE_SCHEMA,
            "domain_count": self.domain_count,
            "nodes": [
                {"id": x.id, "domain": x.domain, "cpu_capacity": x.cpu_capacity,
                 "cpu_free": x.cpu_free, "unit_price": x.unit_price, "delay": x.delay,
                 "plr": x.plr}
                for x in self.nodes
            ],
            "links": [
                {"id": l.id, "endpoints": list(l.endpoints), "bw_capacity": l.bw_capacity,
                 "bw_free": l.bw_free, "unit_price": l.unit_price, "delay": l.delay}
                for l in self.links
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> SubstrateNetwork:
        schema = data.get("schema", SUBSTRATE_SCHEMA)
        if schema != SUBSTRATE_SCHEMA:
            raise ValueError(f"unsupported substrate schema {schema!r}")
        nodes = [SubstrateNode(int(d["id"]), int(d["domain"]), int(d["cpu_capacity"]),
                               int(d.get("cpu_free", d["cpu_capacity"])), float(d["unit_price"]),
                               float(d["delay"]), float(d["plr"]))
                 for d in data["nodes"]]
        links = [SubstrateLink(int(d["id"]), tuple(d["endpoints"]), int(d["bw_capacity"]),
                               int(d.get("bw_free", d["bw_capacity"])), float(d["unit_price"]),
                               float(d["delay"]))
                 for d in data["links"]]
        return cls(nodes, links, data.get("domain_count"))


@dataclass
class VirtualLink:
    endpoints: tuple[int, int]
    bw_demand: int


@dataclass
class VirtualNetworkRequest:
    cpu_demands: list[int]
    links: list[VirtualLink]
    arrival: float = 0.0
    lifetime: float = 1000.0
    id: int = 0

    @property
    def num_nodes(self) -> int:
        return len(self.cpu_demands)

    def is_connected(self) -> bool:
        n = self.num_nodes
        if n == 0:
            return False
        adj = [[] for _ in range(n)]
        for vl in self.links:
            a, b = vl.endpoints
            adj[a].append(b)
            adj[b].append(a)
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == n

    def to_dict(self) -> dict:
        return {
            "schema": VNR_SCHEMA,
            "id": self.id,
            "arrival": self.arrival,
            "lifetime": self.lifetime,
            "cpu_demands": list(self.cpu_demands),
            "links": [{"endpoints": list(vl.endpoints), "bw_demand": vl.bw_demand}
                      for vl in self.links],
        }

    @classmethod
    def from_dict(cls, data: dict) -> VirtualNetworkRequest:
        return cls(
            cpu_demands=[int(c) for c in data["cpu_demands"]],
            links=[VirtualLink(tuple(d["endpoints"]), int(d["bw_demand"])) for d in data["links"]],
            arrival=float(data.get("arrival", 0.0)),
            lifetime=float(data.get("lifetime", 1000.0)),
            id=int(data.get("id", 0)),
        )


@dataclass
class EmbeddingPlan:
    """Node assignment plus one substrate path (tuple of link ids) per virtual link."""

    node_assignment: tuple[int, ...]
    link_paths: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        self.node_assignment = tuple(int(x) for x in self.node_assignment)

    def is_complete(self, v: VirtualNetworkRequest) -> bool:
        return (len(self.node_assignment) == v.num_nodes
                and all(i in self.link_paths for i in range(len(v.links))))

    def to_dict(self) -> dict:
        return {"node_assignment": list(self.node_assignment),
                "link_paths": {str(k): list(p) for k, p in sorted(self.link_paths.items())}}

    @classmethod
    def from_dict(cls, data: dict) -> EmbeddingPlan:
        return cls(tuple(data["node_assignment"]),
                   {int(k): tuple(p) for k, p in data.get("link_paths", {}).items()})


@dataclass(frozen=True)
class Violation:
    kind: str  # cpu | bandwidth | duplicate_node | endpoint_mismatch | unknown_node | unknown_link
    detail: str


@dataclass
class Verdict:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self):
        return self.ok


def walk_path(links: Sequence[SubstrateLink], start: int | None = None) -> list[int]:
    """Node sequence traversed by ``links``; raises if not connected end to end."""
    if not links:
        raise InvalidPathError("empty path")
    if start is None:
        a, b = links[0].endpoints
        if len(links) == 1:
            start = a
        else:
            start = a if b in links[1].endpoints else b
    nodes = [start]
    cur = start
    for l in links:
        cur = l.other(cur)
        nodes.append(cur)
    return nodes


def aggregate_unit_price(path: Sequence[SubstrateLink]) -> float:
    """Sum of link unit prices along a connected substrate path."""
    walk_path(path)
    return sum(l.unit_price for l in path)


def _resolve(s: SubstrateNetwork, path: Iterable[int]) -> list[SubstrateLink]:
    return [s.links[i] for i in path]


def check_constraints(s: SubstrateNetwork, v: VirtualNetworkRequest, p: EmbeddingPlan) -> Verdict:
    """Collect every capacity / structural violation of ``p``.

    Bandwidth is checked against the aggregate demand the plan places on each
    substrate link.  Missing link paths are skipped, so a plan carrying only a
    node assignment is checked for node constraints alone.
    """
    out = []
    assign = p.node_assignment
    if len(assign) != v.num_nodes:
        out.append(Violation("unknown_node", f"assignment has {len(assign)} genes, "
                                             f"request has {v.num_nodes} nodes"))
        return Verdict(out)
    seen: dict[int, int] = {}
    for k, ns in enumerate(assign):
        if not 0 <= ns < s.num_nodes:
            out.append(Violation("unknown_node", f"virtual node {k} -> {ns}"))
            continue
        if ns in seen:
            out.append(Violation("duplicate_node",
                                 f"virtual nodes {seen[ns]} and {k} share substrate node {ns}"))
        else:
            seen[ns] = k
        if v.cpu_demands[k] > s.nodes[ns].cpu_free:
            out.append(Violation("cpu", f"virtual node {k} needs {v.cpu_demands[k]}, "
                                        f"node {ns} has {s.nodes[ns].cpu_free}"))
    load: dict[int, int] = {}
    for i, path in sorted(p.link_paths.items()):
        vl = v.links[i]
        if any(not 0 <= li < s.num_links for li in path):
            out.append(Violation("unknown_link", f"virtual link {i}"))
            continue
        src, dst = (assign[e] for e in vl.endpoints)
        try:
            nodes = walk_path(_resolve(s, path), start=src)
        except InvalidPathError:
            out.append(Violation("endpoint_mismatch", f"virtual link {i}: path does not start "
                                                      f"at {src} or is broken"))
            continue
        if nodes[-1] != dst:
            out.append(Violation("endpoint_mismatch", f"virtual link {i}: path ends at "
                                                      f"{nodes[-1]}, expected {dst}"))
        if len(set(nodes)) != len(nodes):
            out.append(Violation("endpoint_mismatch", f"virtual link {i}: path is not simple"))
        for li in path:
            load[li] = load.get(li, 0) + vl.bw_demand
    for li, demand in sorted(load.items()):
        if demand > s.links[li].bw_free:
            out.append(Violation("bandwidth", f"link {li} needs {demand}, "
                                              f"has {s.links[li].bw_free}"))
    return Verdict(out)


def _require_complete(v: VirtualNetworkRequest, p: EmbeddingPlan):
    if not p.is_complete(v):
        raise IncompletePlanError("plan lacks node genes or link paths")


def quotation(s: SubstrateNetwork, v: VirtualNetworkRequest, p: EmbeddingPlan) -> float:
    """Price of the plan: CPU times node price plus bandwidth times path price."""
    _require_complete(v, p)
    total = sum(c * s.nodes[ns].unit_price for c, ns in zip(v.cpu_demands, p.node_assignment))
    for i, vl in enumerate(v.links):
        total += vl.bw_demand * aggregate_unit_price(_resolve(s, p.link_paths[i]))
    return total


def revenue_and_cost(v: VirtualNetworkRequest, p: EmbeddingPlan) -> tuple[int, int]:
    _require_complete(v, p)
    cpu = sum(v.cpu_demands)
    revenue = cpu + sum(vl.bw_demand for vl in v.links)
    cost = cpu + sum(vl.bw_demand * len(p.link_paths[i]) for i, vl in enumerate(v.links))
    return revenue, cost


def qos_totals(s: SubstrateNetwork, p: EmbeddingPlan) -> tuple[float, float]:
    """(total delay, summed node packet-loss rate) of a plan.

    The loss total adds node rates only and may exceed 1.
    """
    delay = sum(s.nodes[ns].delay for ns in p.node_assignment)
    for path in p.link_paths.values():
        delay += sum(s.links[li].delay for li in path)
    plr = sum(s.nodes[ns].plr for ns in p.node_assignment)
    return delay, plr


def allocate(s: SubstrateNetwork, v: VirtualNetworkRequest, p: EmbeddingPlan) -> SubstrateNetwork:
    """Reserve the plan's resources on ``s`` (in place, all or nothing)."""
    if id(p) in s._allocations:
        raise AllocationError("plan is already allocated on this substrate")
    _require_complete(v, p)
    verdict = check_constraints(s, v, p)
    if not verdict.ok:
        raise AllocationError(f"infeasible plan: {[x.detail for x in verdict.violations]}")
    cpu = {ns: c for ns, c in zip(p.node_assignment, v.cpu_demands)}
    bw: dict[int, int] = {}
    for i, vl in enumerate(v.links):
        for li in p.link_paths[i]:
            bw[li] = bw.get(li, 0) + vl.bw_demand
    for ns, c in cpu.items():
        s.nodes[ns].cpu_free -= c
    for li, b in bw.items():
        s.links[li].bw_free -= b
    s._allocations[id(p)] = (p, cpu, bw)
    return s


def release(s: SubstrateNetwork, v: VirtualNetworkRequest, p: EmbeddingPlan) -> SubstrateNetwork:
    """Exact inverse of :func:`allocate`."""
    entry = s._allocations.pop(id(p), None)
    if entry is None or entry[0] is not p:
        raise AllocationError("plan was never allocated on this substrate (or already released)")
    _, cpu, bw = entry
    for ns, c in cpu.items():
        node = s.nodes[ns]
        node.cpu_free += c
        assert node.cpu_free <= node.cpu_capacity
    for li, b in bw.items():
        link = s.links[li]
        link.bw_free += b
        assert link.bw_free <= link.bw_capacity
    return s
