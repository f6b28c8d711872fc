"""Hybrid flower-pollination node mapper and the plain GA baseline."""
from __future__ import annotations

import csv
from collections.abc import Callable, Iterable, Sequence
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from ..errors import ChaosStateError, NodeMappingError
from ..fitness.features import (PlanEvaluator, cpu_candidates, normalize_features,
                                random_assignment)
from ..fitness.net import FitnessNet, blended_fitness
from ..netmodel import SubstrateNetwork, VirtualNetworkRequest
from .chaos import CHAOS_U, ChaosState, admissible_seed, chaos_mask, is_admissible_seed
from .operators import (CandidateLists, Individual, chaos_crossover, feasibility_repair, lifespan_of, mutate,
                        recycle_individual, select_elite, self_pollinate, single_point_crossover)


@dataclass
class SolverParams:
    pop_size: int = 20
    max_iters: int = 50
    transfer_prob: float = 0.7
    cross_prob: float = 0.8
    life_factor: float = 1.0
    chaos_u: float = CHAOS_U
    chaos_seed: float | None = None
    rng_seed: int = 0
    baseline_mode: bool = False
    invert_transfer: bool = False
    fitness_coeff: float = 1.0
    user_weight: float = 0.7

    def __post_init__(self):
        if self.pop_size < 4 or self.pop_size % 2:
            raise ValueError("pop_size must be even and at least 4")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        for name in ("transfer_prob", "cross_prob", "user_weight"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0 < self.life_factor <= 3:
            raise ValueError("life_factor must lie in (0, 3]")
        if self.fitness_coeff <= 0:
            raise ValueError("fitness_coeff must be positive")
        if self.chaos_seed is not None and not is_admissible_seed(self.chaos_seed, self.chaos_u):
            raise ValueError(f"chaos_seed {self.chaos_seed} lies on a degenerate orbit")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SolverParams:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown solver keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SolverStats:
    iterations: int = 0
    global_iters: int = 0
    local_iters: int = 0
    chaos_masks: int = 0
    chaos_reseeds: int = 0
    recycles: int = 0
    pollinations: int = 0
    accepted_pollinations: int = 0
    ga_crossovers: int = 0
    mutations: int = 0
    repair_rejections: int = 0


@dataclass
class TraceRow:
    iteration: int
    best_fitness: float
    phase: str


def _distinct_pair(rng, n: int) -> tuple[int, int]:
    """Two distinct indices in range(n), uniform over ordered pairs."""
    r = rng.random(2)
    i = int(r[0] * n)
    j = int(r[1] * (n - 1))
    return i, j + (j >= i)


class NodeSolver:
    """One node-mapping run for one request.

    Every member of the population is feasible for the node constraints at
    all times; fitness is the provisional quotation times the conversion
    coefficient.  ``audit(iteration, population)`` is called after
    initialisation (iteration -1) and after each iteration.
    """

    def __init__(self, s: SubstrateNetwork, v: VirtualNetworkRequest, params: SolverParams,
                 rater: FitnessNet | None = None, evaluator: PlanEvaluator | None = None,
                 lambda_weight: float | None = 2.0, exclude: Iterable[Sequence[int]] = (),
                 audit: Callable[[int, list[Individual]], None] | None = None):
        self.s = s
        self.v = v
        self.params = params
        self.rater = rater
        self.evaluator = evaluator or PlanEvaluator(s, v, coeff=params.fitness_coeff,
                                                    lambda_weight=lambda_weight)
        self.candidates = CandidateLists(cpu_candidates(s, v))
        self.exclude = {tuple(g) for g in exclude}
        self.audit = audit
        self.rng = np.random.default_rng(params.rng_seed)
        seed = params.chaos_seed if params.chaos_seed is not None else admissible_seed(self.rng, params.chaos_u)
        self.chaos = ChaosState(seed, params.chaos_u)
        self.stats = SolverStats()
        self.trace: list[TraceRow] = []
        self.population: list[Individual] = []
        self.best: Individual | None = None

    # -- helpers ---------------------------------------------------------

    def _fit(self, ind: Individual) -> Individual:
        ind.fitness = self.evaluator.fitness(ind.genes)
        return ind

    def _repair(self, ind: Individual) -> Individual | None:
        out = feasibility_repair(ind, self.s, self.v, self.rng, self.candidates)
        if out is None:
            self.stats.repair_rejections += 1
        return out

    def _random(self) -> Individual | None:
        g = random_assignment(self.candidates, self.rng)
        return None if g is None else Individual(g)

    def _lifespan(self, ind: Individual, pop_sum: float) -> int:
        p = self.params
        if pop_sum <= 0:
            return 1
        return lifespan_of(ind.fitness, pop_sum, p.pop_size, p.max_iters, p.life_factor)

    def _note_best(self):
        cur = min(self.population, key=lambda x: x.fitness)
        if self.best is None or cur.fitness < self.best.fitness:
            self.best = Individual(cur.genes, cur.fitness, cur.lifespan)

    def _next_mask(self, length: int) -> np.ndarray:
        try:
            mask, self.chaos = chaos_mask(length, self.chaos)
        except ChaosStateError:
            self.stats.chaos_reseeds += 1
            self.chaos = ChaosState(admissible_seed(self.rng, self.params.chaos_u), self.params.chaos_u)
            mask, self.chaos = chaos_mask(length, self.chaos)
        self.stats.chaos_masks += 1
        return mask

    # -- phases ----------------------------------------------------------

    def initialise(self):
        X = self.params.pop_size
        pop = []
        tries = 0
        fallback = []
        while len(pop) < X and tries < 20 * X:
            tries += 1
            ind = self._random()
            if ind is None:
                break
            if ind.genes in self.exclude:
                fallback.append(ind)
                continue
            pop.append(ind)
        while len(pop) < X and (pop or fallback):
            pop.append(Individual((pop or fallback)[len(pop) % len(pop or fallback)].genes))
        if not pop:
            raise NodeMappingError(f"request {self.v.id}: no feasible node assignment")
        for ind in pop:
            self._fit(ind)
        total = sum(x.fitness for x in pop)
        for ind in pop:
            ind.lifespan = self._lifespan(ind, total)
        self.population = pop
        self._note_best()
        if self.audit:
            self.audit(-1, self.population)

    def _life_cycle(self):
        renewed = []
        for i, ind in enumerate(self.population):
            if ind.lifespan > 0:
                continue
            new = recycle_individual(ind, self.s, self.v, self.rng, self.candidates)
            if new is None:
                new = Individual(ind.genes)
            self.population[i] = self._fit(new)
            renewed.append(i)
            self.stats.recycles += 1
        if renewed:
            total = sum(x.fitness for x in self.population)
            for i in renewed:
                self.population[i].lifespan = self._lifespan(self.population[i], total)

    def _global(self):
        p = self.params
        X = p.pop_size
        elite = select_elite(self.population)
        pop = list(elite)
        fertile = set()
        children = []
        attempts = 0
        while len(pop) < X and attempts < 10 * X:
            attempts += 1
            i, j = _distinct_pair(self.rng, len(elite))
            a, b = elite[i], elite[j]
            if self.rng.random() < p.cross_prob:
                kids = chaos_crossover(a, b, self._next_mask(len(a.genes)))
            else:
                kids = (Individual(a.genes), Individual(b.genes))
            for kid in kids:
                kid = self._repair(kid)
                if kid is None or len(pop) >= X:
                    continue
                pop.append(self._fit(kid))
                children.append(kid)
                fertile.update((i, j))
        while len(pop) < X:
            kid = self._random()
            if kid is None:
                kid = Individual(elite[len(pop) % len(elite)].genes)
            pop.append(self._fit(kid))
            children.append(kid)
        total = sum(x.fitness for x in pop)
        for kid in children:
            kid.lifespan = self._lifespan(kid, total)
        for i in fertile:
            elite[i].lifespan -= 1
        self.population = pop

    def _local(self):
        p = self.params
        pop = self.population
        X = len(pop)
        cands = []
        # two distinct partners other than i, drawn without replacement
        draws = self.rng.random((X, 2))
        for i in range(X):
            j = int(draws[i, 0] * (X - 1))
            k = int(draws[i, 1] * (X - 2))
            j += j >= i
            lo, hi = min(i, j), max(i, j)
            k += k >= lo
            k += k >= hi
            cands.append(self_pollinate(pop[i], pop[j], pop[k], self.s, self.v, self.rng,
                                        self.candidates))
            self.stats.pollinations += 1
        base = np.array([self.evaluator.fitness(x.genes) for x in pop + cands])
        if self.rater is not None and p.user_weight > 0:
            raw = self.evaluator.raw_metrics_many([x.genes for x in pop + cands])
            score = blended_fitness(self.rater, normalize_features(raw), base, p.user_weight)
        else:
            score = base
        renewed = []
        new_pop = []
        for i in range(X):
            c = cands[i]
            if c.genes != pop[i].genes and score[X + i] < score[i]:
                new_pop.append(Individual(c.genes, float(base[X + i])))
                renewed.append(i)
                self.stats.accepted_pollinations += 1
            else:
                pop[i].lifespan -= 1
                new_pop.append(pop[i])
        if renewed:
            total = sum(x.fitness for x in new_pop)
            for i in renewed:
                new_pop[i].lifespan = self._lifespan(new_pop[i], total)
        self.population = new_pop

    def _ga_generation(self):
        p = self.params
        pop = self.population
        X = p.pop_size
        k = len(self.v.cpu_demands)
        rate = 1.0 / k

        def tournament():
            i, j = _distinct_pair(self.rng, X)
            return pop[i] if pop[i].fitness <= pop[j].fitness else pop[j]

        elite = min(pop, key=lambda x: x.fitness)
        new = [Individual(elite.genes, elite.fitness)]
        attempts = 0
        while len(new) < X and attempts < 10 * X:
            attempts += 1
            a, b = tournament(), tournament()
            if k > 1 and self.rng.random() < p.cross_prob:
                kids = single_point_crossover(a, b, int(self.rng.integers(1, k)))
                self.stats.ga_crossovers += 1
            else:
                kids = (Individual(a.genes), Individual(b.genes))
            for kid in kids:
                kid = mutate(kid, rate, self.candidates, self.rng)
                self.stats.mutations += 1
                kid = self._repair(kid)
                if kid is not None and len(new) < X:
                    new.append(self._fit(kid))
        while len(new) < X:
            new.append(Individual(elite.genes, elite.fitness))
        self.population = new

    def step(self, t: int):
        p = self.params
        if p.baseline_mode:
            self._ga_generation()
            phase = "ga"
        else:
            self._life_cycle()
            r = self.rng.random()
            go_global = r < p.transfer_prob if p.invert_transfer else r > p.transfer_prob
            if go_global:
                self._global()
                self.stats.global_iters += 1
                phase = "global"
            else:
                self._local()
                self.stats.local_iters += 1
                phase = "local"
        self.stats.iterations += 1
        self._note_best()
        self.trace.append(TraceRow(t, self.best.fitness, phase))
        if self.audit:
            self.audit(t, self.population)

    def run(self) -> Individual:
        self.initialise()
        for t in range(self.params.max_iters):
            self.step(t)
        return self.best


def solve_nodes(s: SubstrateNetwork, v: VirtualNetworkRequest, params: SolverParams,
                rater: FitnessNet | None = None, **kw) -> Individual:
    """Best node assignment found (lowest fitness ever seen).

    Raises :class:`NodeMappingError` if no feasible assignment can be drawn.
    """
    return NodeSolver(s, v, params, rater, **kw).run()


def write_trace_csv(path, trace: Sequence[TraceRow]):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "best_fitness", "phase"])
        for row in trace:
            w.writerow([row.iteration, repr(row.best_fitness), row.phase])
