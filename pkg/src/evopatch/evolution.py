"""Multiobjective patch search.

Classic NSGA-II machinery over patch genomes: binary-tournament mating under
the crowded comparison, half-uniform crossover at whole-tuple granularity,
single-position mutation, fast non-dominated sorting and crowding-distance
truncation. Every individual whose filtered tests all pass is validated
against the full suite and, if plausible, archived with the evaluation
counter value at discovery.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .fitness import EvalOutcome, EvaluationError, FitnessVector
from .localization import SuspiciousStatement
from .patches import PatchGenome

STOP_MODES = ("full_budget", "first_plausible")


@dataclass
class EvolutionConfig:
    pop_size: int = 40
    generations: int = 50
    w: float = 0.5
    mu: float = 0.06
    stop_mode: str = "full_budget"
    wall_clock_limit: float = 3600.0
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError("pop_size must be even and >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.w < 0:
            raise ValueError("w must be >= 0")
        if not 0 < self.mu <= 1:
            raise ValueError("mu must be in (0, 1]")
        if self.stop_mode not in STOP_MODES:
            raise ValueError(f"stop_mode must be one of {STOP_MODES}")


@dataclass
class Individual:
    genome: PatchGenome
    fitness: FitnessVector | None = None
    passed_filtered: bool = False
    plausible: bool = False
    eval_index: int | None = None


@dataclass
class RepairProblem:
    """The search's view of a subject: genome evaluation and patch rendering."""

    lbs: Sequence[SuspiciousStatement]
    evaluate: Callable[[PatchGenome], EvalOutcome]
    validate_full: Callable[[PatchGenome], bool]
    patch_key: Callable[[PatchGenome], tuple]
    render_patch: Callable[[PatchGenome], str]


@dataclass
class ArchiveEntry:
    diff: str
    f1: float
    f2: float
    evaluations_at_discovery: int


@dataclass
class EvolutionResult:
    archive: list[ArchiveEntry] = field(default_factory=list)
    generations: list[dict] = field(default_factory=list)
    evaluations: int = 0
    wall_s: float = 0.0
    stopped_by: str = "generations"
    error: str | None = None


def init_population(
    lbs: Sequence[SuspiciousStatement],
    cfg: EvolutionConfig,
    rng: random.Random,
) -> list[Individual]:
    """Seed genomes sparsely: positions enable with probability mu*(1+susp)."""
    if not lbs:
        raise ValueError("cannot initialize a population without LBSs")
    population = []
    for _ in range(cfg.pop_size):
        b, u, p, q = [], [], [], []
        for stmt in lbs:
            prob = min(1.0, cfg.mu * (1.0 + stmt.susp))
            b.append(1 if rng.random() < prob else 0)
            u.append(rng.randint(1, 3))
            n_rep = len(stmt.replacement_candidates)
            n_ins = len(stmt.insertion_candidates)
            p.append(rng.randrange(n_rep) if n_rep else 0)
            q.append(rng.randrange(n_ins) if n_ins else 0)
        population.append(Individual(PatchGenome(tuple(b), tuple(u), tuple(p), tuple(q))))
    return population


def dominates(a: FitnessVector, b: FitnessVector) -> bool:
    """Pareto dominance for minimization: no worse in both, better in one."""
    return a.f1 <= b.f1 and a.f2 <= b.f2 and (a.f1 < b.f1 or a.f2 < b.f2)


def fast_nondominated_sort(fitnesses: Sequence[FitnessVector]) -> list[list[int]]:
    """Deb's fast non-dominated sort; returns index fronts, best first."""
    n = len(fitnesses)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    fronts: list[list[int]] = [[]]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if dominates(fitnesses[i], fitnesses[j]):
                dominated_by[i].append(j)
            elif dominates(fitnesses[j], fitnesses[i]):
                domination_count[i] += 1
        if domination_count[i] == 0:
            fronts[0].append(i)
    current = 0
    while fronts[current]:
        nxt: list[int] = []
        for i in fronts[current]:
            for j in dominated_by[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    nxt.append(j)
        current += 1
        fronts.append(nxt)
    fronts.pop()
    return fronts


def crowding_distance(front: Sequence[FitnessVector]) -> list[float]:
    """Range-normalized neighbor gaps; boundary points are infinitely spaced."""
    size = len(front)
    if size == 0:
        return []
    if size <= 2:
        return [float("inf")] * size
    distance = [0.0] * size
    for objective in (0, 1):
        order = sorted(range(size), key=lambda i: front[i].as_tuple()[objective])
        lo = front[order[0]].as_tuple()[objective]
        hi = front[order[-1]].as_tuple()[objective]
        distance[order[0]] = float("inf")
        distance[order[-1]] = float("inf")
        span = hi - lo
        if span == 0:
            continue
        for rank in range(1, size - 1):
            prev_v = front[order[rank - 1]].as_tuple()[objective]
            next_v = front[order[rank + 1]].as_tuple()[objective]
            distance[order[rank]] += (next_v - prev_v) / span
    return distance


def _tuples(g: PatchGenome) -> list[tuple[int, int, int, int]]:
    return list(zip(g.b, g.u, g.p, g.q))


def _from_tuples(tuples: Sequence[tuple[int, int, int, int]]) -> PatchGenome:
    b, u, p, q = zip(*tuples) if tuples else ((), (), (), ())
    return PatchGenome(tuple(b), tuple(u), tuple(p), tuple(q))


def hux_crossover(
    a: PatchGenome,
    b: PatchGenome,
    rng: random.Random,
) -> tuple[PatchGenome, PatchGenome]:
    """Half-uniform crossover at whole-tuple granularity.

    Positions where the parents agree componentwise are copied; of the k
    differing positions, exactly floor(k/2), drawn without replacement, have
    their (b,u,p,q) tuple exchanged between the children.
    """
    if len(a) != len(b):
        raise ValueError("parents must share genome length")
    ta, tb = _tuples(a), _tuples(b)
    differing = [j for j in range(len(ta)) if ta[j] != tb[j]]
    for j in rng.sample(differing, len(differing) // 2):
        ta[j], tb[j] = tb[j], ta[j]
    return _from_tuples(ta), _from_tuples(tb)


def mutate(
    g: PatchGenome,
    lbs: Sequence[SuspiciousStatement],
    rng: random.Random,
) -> PatchGenome:
    """Flip the enable bit and resample the genes of one uniformly chosen position."""
    if len(g) != len(lbs):
        raise ValueError("genome length must match the LBS list")
    tuples = _tuples(g)
    j = rng.randrange(len(tuples))
    bit, _, _, _ = tuples[j]
    n_rep = len(lbs[j].replacement_candidates)
    n_ins = len(lbs[j].insertion_candidates)
    tuples[j] = (
        1 - bit,
        rng.randint(1, 3),
        rng.randrange(n_rep) if n_rep else 0,
        rng.randrange(n_ins) if n_ins else 0,
    )
    return _from_tuples(tuples)


def _crowded_better(rank_a, dist_a, rank_b, dist_b) -> bool:
    if rank_a != rank_b:
        return rank_a < rank_b
    return dist_a > dist_b


def _rank_and_crowd(population: Sequence[Individual]) -> tuple[list[int], list[float]]:
    fitnesses = [ind.fitness for ind in population]
    fronts = fast_nondominated_sort(fitnesses)
    rank = [0] * len(population)
    dist = [0.0] * len(population)
    for front_rank, front in enumerate(fronts):
        sub = crowding_distance([fitnesses[i] for i in front])
        for slot, i in enumerate(front):
            rank[i] = front_rank
            dist[i] = sub[slot]
    return rank, dist


def _truncate(population: list[Individual], target: int) -> list[Individual]:
    """Keep the best `target` individuals by front, breaking the boundary
    front by crowding distance (stable on ties for determinism)."""
    fitnesses = [ind.fitness for ind in population]
    fronts = fast_nondominated_sort(fitnesses)
    kept: list[Individual] = []
    for front in fronts:
        if len(kept) + len(front) <= target:
            kept.extend(population[i] for i in front)
            continue
        dist = crowding_distance([fitnesses[i] for i in front])
        by_crowding = sorted(range(len(front)), key=lambda s: -dist[s])
        kept.extend(population[front[s]] for s in by_crowding[: target - len(kept)])
        break
    return kept


def evolve(
    problem: RepairProblem,
    cfg: EvolutionConfig,
    rng: random.Random,
) -> EvolutionResult:
    """Run the generational loop and collect plausible patches.

    Deterministic given the seed: evaluation results are merged in genome
    order, so `jobs > 1` changes wall time but never the outcome.
    """
    result = EvolutionResult()
    archive_keys: set[tuple] = set()
    started = time.monotonic()
    issued = 0

    def out_of_time() -> bool:
        return time.monotonic() - started > cfg.wall_clock_limit

    def evaluate_batch(batch: list[Individual]) -> None:
        nonlocal issued
        pending = [ind for ind in batch if ind.fitness is None]
        for ind in pending:
            issued += 1
            ind.eval_index = issued
        if cfg.jobs > 1 and len(pending) > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                outcomes = list(pool.map(lambda ind: problem.evaluate(ind.genome), pending))
        else:
            outcomes = [problem.evaluate(ind.genome) for ind in pending]
        for ind, outcome in zip(pending, outcomes):
            ind.fitness = outcome.fitness
            ind.passed_filtered = outcome.passed_filtered
        # Archive in genome order so discovery indices are schedule-independent.
        for ind in pending:
            if not ind.passed_filtered:
                continue
            ind.plausible = problem.validate_full(ind.genome)
            if not ind.plausible:
                continue
            key = problem.patch_key(ind.genome)
            if key in archive_keys:
                continue
            archive_keys.add(key)
            result.archive.append(
                ArchiveEntry(
                    diff=problem.render_patch(ind.genome),
                    f1=ind.fitness.f1,
                    f2=ind.fitness.f2,
                    evaluations_at_discovery=ind.eval_index,
                )
            )

    def record_generation(generation: int, population: list[Individual]) -> None:
        result.generations.append(
            {
                "generation": generation,
                "best_f1": min(ind.fitness.f1 for ind in population),
                "best_f2": min(ind.fitness.f2 for ind in population),
            }
        )

    try:
        population = init_population(problem.lbs, cfg, rng)
        evaluate_batch(population)
        record_generation(0, population)

        for generation in range(1, cfg.generations + 1):
            if cfg.stop_mode == "first_plausible" and result.archive:
                result.stopped_by = "first_plausible"
                break
            if out_of_time():
                result.stopped_by = "wall_clock"
                break

            rank, dist = _rank_and_crowd(population)

            def pick() -> Individual:
                i = rng.randrange(len(population))
                j = rng.randrange(len(population))
                return population[i] if _crowded_better(rank[i], dist[i], rank[j], dist[j]) else population[j]

            offspring: list[Individual] = []
            while len(offspring) < cfg.pop_size:
                child_a, child_b = hux_crossover(pick().genome, pick().genome, rng)
                offspring.append(Individual(mutate(child_a, problem.lbs, rng)))
                offspring.append(Individual(mutate(child_b, problem.lbs, rng)))

            evaluate_batch(offspring)
            population = _truncate(population + offspring, cfg.pop_size)
            record_generation(generation, population)
        else:
            result.stopped_by = "generations"
        if cfg.stop_mode == "first_plausible" and result.archive and result.stopped_by == "generations":
            result.stopped_by = "first_plausible"
    except EvaluationError as exc:
        result.error = str(exc)
        result.stopped_by = "error"

    result.evaluations = issued
    result.wall_s = time.monotonic() - started
    return result
