"""NSGA-II selection run inside each species, trading task fitness against gate count.

Objectives are minimised. Task fitness enters negated, never reciprocated,
so a zero fitness stays representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .evolution import (
    Agent,
    EvolutionConfig,
    Evaluator,
    FitnessFn,
    GenerationHook,
    GenerationRecord,
    allocate_offspring,
    best_of,
    generation_record,
    initial_population,
    ranked,
    reproduce,
    speciate,
    substream,
)
from .genome import InnovationRegistry

Objectives = tuple[float, ...]


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    if len(a) != len(b):
        raise ValueError("objective vectors differ in length")
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def fast_non_dominated_sort(points: Sequence[Sequence[float]]) -> list[list[int]]:
    if not points:
        raise ValueError("cannot sort an empty point set")
    n = len(points)
    dominated_by = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if dominates(points[p], points[q]):
                dominated_by[p].append(q)
            elif dominates(points[q], points[p]):
                counts[p] += 1
        if counts[p] == 0:
            fronts[0].append(p)
    while True:
        nxt = []
        for p in fronts[-1]:
            for q in dominated_by[p]:
                counts[q] -= 1
                if counts[q] == 0:
                    nxt.append(q)
        if not nxt:
            break
        fronts.append(sorted(nxt))
    return fronts


def crowding_distance(front: Sequence[Sequence[float]]) -> list[float]:
    """Per-member sum over objectives of the normalised gap between its sorted neighbours."""
    if not front:
        raise ValueError("empty front")
    size = len(front)
    distance = [0.0] * size
    for k in range(len(front[0])):
        order = sorted(range(size), key=lambda i: front[i][k])
        lo, hi = front[order[0]][k], front[order[-1]][k]
        distance[order[0]] = distance[order[-1]] = math.inf
        if hi == lo:
            continue
        for pos in range(1, size - 1):
            i = order[pos]
            distance[i] += (front[order[pos + 1]][k] - front[order[pos - 1]][k]) / (hi - lo)
    return distance


@dataclass
class RankedAgent:
    agent: Agent
    objectives: Objectives
    rank: int = 0
    crowding: float = 0.0


def assign_ranks(items: Sequence[RankedAgent]) -> list[list[int]]:
    fronts = fast_non_dominated_sort([it.objectives for it in items])
    for rank, front in enumerate(fronts):
        distances = crowding_distance([items[i].objectives for i in front])
        for i, d in zip(front, distances):
            items[i].rank = rank
            items[i].crowding = d
    return fronts


def nsga2_select(items: Sequence[RankedAgent], n: int) -> list[RankedAgent]:
    """Keep ``n`` of the candidates: whole fronts by rank, the straddling front by crowding.

    Ranks and crowding distances are (re)computed on the candidate set.
    Equal crowding keeps input order.
    """
    if not 0 <= n <= len(items):
        raise ValueError(f"cannot select {n} of {len(items)} candidates")
    items = list(items)
    fronts = assign_ranks(items)
    chosen: list[RankedAgent] = []
    for front in fronts:
        members = [items[i] for i in front]
        if len(chosen) + len(members) <= n:
            chosen.extend(members)
            continue
        members.sort(key=lambda it: -it.crowding)
        chosen.extend(members[: n - len(chosen)])
        break
    return chosen


def gate_objectives(agent: Agent) -> Objectives:
    return (-agent.fitness, float(agent.genome.n_gates))


def evolve_moo(
    config: EvolutionConfig,
    fitness_fn: FitnessFn,
    on_generation: Optional[GenerationHook] = None,
) -> tuple[Agent, list[GenerationRecord]]:
    """The speciated loop of ``evolve`` with per-species NSGA-II survivor selection.

    Each species breeds as many offspring as its allocated share, the
    offspring are scored, and parents plus offspring are cut back to that
    share by Pareto rank and crowding distance.
    """
    config.validate()
    registry = InnovationRegistry()
    evaluate = Evaluator(fitness_fn, config.rng_seed)
    population = initial_population(config, registry)
    evaluate(population, 0)
    best = best_of(ranked(population)[::-1], None)
    history: list[GenerationRecord] = []
    representatives: list[Agent] = []

    for gen in range(config.generations):
        species = speciate(population, representatives, config.delta0, config.c1, config.c2, config.c3)
        record = generation_record(gen, population, len(species), evaluate.count)
        everyone = [RankedAgent(a, gate_objectives(a)) for a in population]
        fronts = assign_ranks(everyone)
        record.front_sizes = tuple(len(f) for f in fronts)
        record.best_objectives = gate_objectives(ranked(population)[0])
        if on_generation is not None:
            on_generation(record, population)
        history.append(record)

        counts = allocate_offspring(species, config.population)
        rng = substream(config.rng_seed, "reproduce", gen)
        broods = []
        for sp, count in zip(species, counts):
            if count:
                offspring = reproduce(sp, count, config, registry, rng, generation=gen + 1, elitism=False)
                broods.append((sp, count, offspring))
        evaluate([a for _, _, brood in broods for a in brood], gen, stream="offspring")

        population = []
        representatives = []
        for sp, count, offspring in broods:
            representatives.append(sp.best())
            pool = [RankedAgent(a, gate_objectives(a)) for a in sp.members + offspring]
            for kept in nsga2_select(pool, count):
                agent = kept.agent
                if agent.generation != gen + 1:
                    agent = Agent(agent.genome, generation=gen + 1, parent=agent)
                population.append(agent)
        evaluate(population, gen + 1)
        best = best_of(ranked(population)[::-1], best)
    return best, history


def sort_by_total_order(items: Sequence[RankedAgent]) -> list[RankedAgent]:
    """Rank ascending, then crowding descending; stable."""
    return sorted(items, key=lambda it: (it.rank, -it.crowding))

