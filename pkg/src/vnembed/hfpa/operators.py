"""Population operators for node-mapping individuals.

An individual's genes map virtual node ``k`` to a substrate node id.  The
candidate list for position ``k`` holds the substrate nodes whose residual
CPU covers virtual node ``k``'s demand.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from ..fitness.features import cpu_candidates, draw_unused, random_assignment
from ..netmodel import SubstrateNetwork, VirtualNetworkRequest


@dataclass
class Individual:
    genes: tuple[int, ...]
    fitness: float = math.nan
    lifespan: int = 0

    def __post_init__(self):
        self.genes = tuple(map(int, self.genes))


class CandidateLists(list):
    """Per-position candidate lists with matching sets for fast membership tests."""

    def __init__(self, lists):
        super().__init__(list(c) for c in lists)
        self.sets = [set(c) for c in self]


def _cands(s, v, candidates):
    return cpu_candidates(s, v) if candidates is None else candidates


def _sets(cands):
    sets = getattr(cands, "sets", None)
    return sets if sets is not None else [set(c) for c in cands]


def is_feasible(genes: Sequence[int], candidates: Sequence[Sequence[int]]) -> bool:
    """Injective and every gene drawn from its position's candidate list."""
    return (len(set(genes)) == len(genes)
            and all(g in c for g, c in zip(genes, candidates)))


def random_individual(s: SubstrateNetwork, v: VirtualNetworkRequest, rng,
                      candidates=None) -> Individual | None:
    genes = random_assignment(_cands(s, v, candidates), rng)
    return None if genes is None else Individual(genes)


def feasibility_repair(ind: Individual, s: SubstrateNetwork, v: VirtualNetworkRequest, rng,
                       candidates=None) -> Individual | None:
    """Re-roll duplicate or CPU-infeasible genes; None if some gene has no option left.

    Genes are scanned left to right.  The first occurrence of a substrate node
    keeps it; later duplicates and infeasible genes are redrawn uniformly from
    the candidates not yet used.  A feasible input is returned as is.
    """
    cands = _cands(s, v, candidates)
    if len(ind.genes) != len(cands):
        raise ValueError("gene length does not match the number of virtual nodes")
    sets = _sets(cands)
    used = set()
    bad = []
    for pos, g in enumerate(ind.genes):
        if g in used or g not in sets[pos]:
            bad.append(pos)
        else:
            used.add(g)
    if not bad:
        return ind
    genes = list(ind.genes)
    for pos in bad:
        g = draw_unused(cands[pos], used, rng)
        if g is None:
            return None
        used.add(g)
        genes[pos] = g
    return Individual(tuple(genes), lifespan=ind.lifespan)


def chaos_crossover(a: Individual, b: Individual, mask) -> tuple[Individual, Individual]:
    """Swap genes wherever the mask is 1.  Offspring still need repair."""
    if len(a.genes) != len(b.genes) or len(mask) != len(a.genes):
        raise ValueError("parents and mask must have equal length")
    ga, gb = list(a.genes), list(b.genes)
    for i, m in enumerate(mask):
        if m:
            ga[i], gb[i] = gb[i], ga[i]
    return Individual(tuple(ga)), Individual(tuple(gb))


def single_point_crossover(a: Individual, b: Individual, cut: int) -> tuple[Individual, Individual]:
    return (Individual(a.genes[:cut] + b.genes[cut:]),
            Individual(b.genes[:cut] + a.genes[cut:]))


def mutate(ind: Individual, rate: float, candidates, rng) -> Individual:
    genes = list(ind.genes)
    draws = rng.random(len(genes))
    for pos, pool in enumerate(candidates):
        if pool and draws[pos] < rate:
            genes[pos] = pool[int(rng.integers(len(pool)))]
    return Individual(tuple(genes))


def lifespan_of(fitness: float, pop_fitness_sum: float, pop_size: int, max_iters: int,
                life_factor: float = 1.0) -> int:
    """Iterations an individual may survive, proportional to its fitness share.

    Short runs (fewer than 25 iterations) scale the share by 5, longer runs
    by ``max_iters / 5``.  Rounded half up and never below 1.
    """
    if pop_fitness_sum <= 0:
        raise ValueError("population fitness sum must be positive")
    share = life_factor * fitness * pop_size / pop_fitness_sum
    value = share * 5 if max_iters < 25 else share * max_iters / 5
    return max(1, math.floor(value + 0.5))


def recycle_individual(old: Individual, s: SubstrateNetwork, v: VirtualNetworkRequest, rng,
                       candidates=None) -> Individual | None:
    """Replacement for an individual whose lifespan ran out.

    A fresh random individual is drawn; wherever it agrees with ``old`` the
    gene is redrawn from the other unused candidates, so that old choices are
    not simply reproduced.  If some agreeing position has no alternative the
    fresh individual is returned without that adjustment.  Fitness and
    lifespan are left for the caller to set.
    """
    cands = _cands(s, v, candidates)
    new = random_assignment(cands, rng)
    if new is None:
        return None
    genes = list(new)
    used = set(genes)
    for pos in [i for i, (a, b) in enumerate(zip(new, old.genes)) if a == b]:
        pool = [c for c in cands[pos] if c not in used and c != old.genes[pos]]
        if not pool:
            return Individual(new)
        g = pool[int(rng.integers(len(pool)))]
        used.discard(genes[pos])
        used.add(g)
        genes[pos] = g
    return Individual(tuple(genes))


def sign_pollen(x_j: Sequence[int], x_k: Sequence[int]) -> np.ndarray:
    """Componentwise sign of the difference ``x_j - x_k``."""
    return np.sign(np.asarray(x_j, dtype=np.int64) - np.asarray(x_k, dtype=np.int64))


def pollinated_genes(x_i: Sequence[int], x_j: Sequence[int], x_k: Sequence[int]) -> tuple[int, ...]:
    """Step each gene of ``x_i`` by at most one node id towards ``x_j - x_k``."""
    return tuple(g + (a > b) - (a < b) for g, a, b in zip(x_i, x_j, x_k))


def self_pollinate(x_i: Individual, x_j: Individual, x_k: Individual, s: SubstrateNetwork,
                   v: VirtualNetworkRequest, rng, candidates=None) -> Individual:
    if not len(x_i.genes) == len(x_j.genes) == len(x_k.genes):
        raise ValueError("individuals must have equal length")
    cand = Individual(pollinated_genes(x_i.genes, x_j.genes, x_k.genes), lifespan=x_i.lifespan)
    repaired = feasibility_repair(cand, s, v, rng, candidates)
    return x_i if repaired is None else repaired


def select_elite(pop: Sequence[Individual]) -> list[Individual]:
    """The better half (lowest fitness); ties keep insertion order."""
    keep = max(1, len(pop) // 2)
    order = sorted(range(len(pop)), key=lambda i: pop[i].fitness)
    return [pop[i] for i in order[:keep]]


def with_fitness(ind: Individual, fitness: float, lifespan: int | None = None) -> Individual:
    return replace(ind, fitness=fitness, lifespan=ind.lifespan if lifespan is None else lifespan)
