"""Population management: speciation, offspring allocation, reproduction and the generational loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .genome import (
    Genome,
    InnovationRegistry,
    compatibility_distance,
    crossover,
    init_genome,
    mutate_add_cnot,
    mutate_add_rot,
    mutate_weights,
)

# Every random draw comes from SeedSequence(seed, spawn_key=(stream, *indices)),
# so a generation or a single agent's evaluation can be replayed on its own.
STREAMS = {"init": 0, "reproduce": 1, "evaluate": 2, "offspring": 3, "report": 4}


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    key = (STREAMS[name], *indices)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


class FitnessFn(Protocol):
    def __call__(self, genome: Genome, rng: np.random.Generator) -> float: ...


@dataclass
class EvolutionConfig:
    generations: int = 50
    population: int = 150
    sigma: float = 0.01
    p_w: float = 0.3
    p_rot: float = 0.5
    p_cnot: float = 0.5
    delta0: float = 1.0
    initial_layers: int = 0
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 0.4
    survival_fraction: float = 0.5
    episodes_per_eval: int = 3
    rng_seed: int = 0
    n_wires: int = 4
    elitism: bool = True

    def validate(self) -> None:
        for name in ("p_w", "p_rot", "p_cnot"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.survival_fraction <= 1.0:
            raise ValueError("survival_fraction must lie in (0, 1]")
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.generations < 0 or self.initial_layers < 0:
            raise ValueError("generations and initial_layers must be nonnegative")
        if self.episodes_per_eval < 1:
            raise ValueError("episodes_per_eval must be >= 1")
        if self.n_wires < 1:
            raise ValueError("n_wires must be >= 1")


@dataclass(eq=False)
class Agent:
    genome: Genome
    fitness: Optional[float] = None
    generation: int = 0
    parent: Optional["Agent"] = field(default=None, repr=False)

    def lineage(self) -> list["Agent"]:
        """This agent and its primary ancestors, oldest first."""
        chain, node = [], self
        while node is not None:
            chain.append(node)
            node = node.parent
        return chain[::-1]


@dataclass(eq=False)
class Species:
    representative: Agent
    members: list[Agent] = field(default_factory=list)

    def best(self) -> Agent:
        return max(self.members, key=_fitness)


@dataclass
class GenerationRecord:
    generation: int
    best_fitness: float
    top5_mean: float
    pop_mean: float
    n_rot: int
    n_cnot: int
    n_gates: int
    n_species: int
    evals_cumulative: int
    accuracy: Optional[float] = None
    front_sizes: tuple[int, ...] = ()
    best_objectives: tuple[float, ...] = ()


def _fitness(agent: Agent) -> float:
    if agent.fitness is None:
        raise ValueError("agent has not been evaluated")
    return agent.fitness


def ranked(agents: Sequence[Agent]) -> list[Agent]:
    """Agents by descending fitness; stable for ties."""
    return sorted(agents, key=lambda a: -_fitness(a))


def speciate(
    agents: Sequence[Agent],
    representatives: Sequence[Agent],
    delta0: float,
    c1: float,
    c2: float,
    c3: float,
) -> list[Species]:
    """First-match assignment against representatives; unmatched agents found new species.

    Species that end up with no members are dropped.
    """
    species = [Species(rep) for rep in representatives]
    for agent in agents:
        for sp in species:
            if compatibility_distance(agent.genome, sp.representative.genome, c1, c2, c3) < delta0:
                sp.members.append(agent)
                break
        else:
            species.append(Species(agent, [agent]))
    return [sp for sp in species if sp.members]


def largest_remainder(quotas: Sequence[float], total: int) -> list[int]:
    floors = [math.floor(q) for q in quotas]
    remainder = total - sum(floors)
    order = sorted(range(len(quotas)), key=lambda j: (-(quotas[j] - floors[j]), j))
    for j in order[:remainder]:
        floors[j] += 1
    return floors


def allocate_offspring(species: Sequence[Species], n: int) -> list[int]:
    """Offspring count per species: sum of member fitness over the population mean.

    Fitness is shifted by the population minimum when negative. Quotas are
    rounded by largest remainder so the counts add up to ``n``.
    """
    if not species or not any(sp.members for sp in species):
        raise ValueError("cannot allocate offspring for an empty population")
    fitness = [[_fitness(a) for a in sp.members] for sp in species]
    flat = [f for group in fitness for f in group]
    if not all(math.isfinite(f) for f in flat):
        raise ValueError("fitness values must be finite")
    shift = min(0.0, min(flat))
    mean = sum(f - shift for f in flat) / len(flat)
    if mean == 0:
        quotas = [n / len(species)] * len(species)
    else:
        quotas = [sum(f - shift for f in group) / mean * n / len(flat) for group in fitness]
    return largest_remainder(quotas, n)


def mutate(genome: Genome, config: EvolutionConfig, registry: InnovationRegistry, rng: np.random.Generator) -> Genome:
    genome = mutate_weights(genome, config.sigma, config.p_w, rng)
    if rng.random() < config.p_rot:
        genome = mutate_add_rot(genome, registry, rng)
    if rng.random() < config.p_cnot:
        genome = mutate_add_cnot(genome, registry, rng)
    return genome


def reproduce(
    species: Species,
    count: int,
    config: EvolutionConfig,
    registry: InnovationRegistry,
    rng: np.random.Generator,
    generation: int = 0,
    elitism: Optional[bool] = None,
) -> list[Agent]:
    """``count`` children from the top ``survival_fraction`` of the species."""
    if count < 0:
        raise ValueError("offspring count must be nonnegative")
    if not species.members:
        raise ValueError("cannot reproduce an empty species")
    elitism = config.elitism if elitism is None else elitism
    members = ranked(species.members)
    n_survivors = max(1, math.ceil(config.survival_fraction * len(members)))
    survivors = members[:n_survivors]
    children = []
    if elitism and count >= 1:
        champion = survivors[0]
        children.append(Agent(champion.genome, generation=generation, parent=champion))
    while len(children) < count:
        a = survivors[rng.integers(n_survivors)]
        b = survivors[rng.integers(n_survivors)]
        genome = crossover(a.genome, b.genome, _fitness(a), _fitness(b), rng)
        genome = mutate(genome, config, registry, rng)
        parent = b if _fitness(b) > _fitness(a) else a
        children.append(Agent(genome, generation=generation, parent=parent))
    return children


class Evaluator:
    """Scores agents with per-agent random streams and counts evaluations."""

    def __init__(self, fitness_fn: FitnessFn, seed: int, stream: str = "evaluate"):
        self.fitness_fn = fitness_fn
        self.seed = seed
        self.stream = stream
        self.count = 0

    def __call__(self, agents: Sequence[Agent], generation: int, stream: Optional[str] = None) -> None:
        stream = stream or self.stream
        rngs = [substream(self.seed, stream, generation, i) for i in range(len(agents))]
        genomes = [a.genome for a in agents]
        batch = getattr(self.fitness_fn, "batch", None)
        if batch is not None:
            values = list(batch(genomes, rngs))
        else:
            values = [self.fitness_fn(g, r) for g, r in zip(genomes, rngs)]
        for agent, value in zip(agents, values):
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"fitness function returned non-finite value {value}")
            agent.fitness = value
        self.count += len(agents)


def initial_population(config: EvolutionConfig, registry: InnovationRegistry) -> list[Agent]:
    """``population`` copies of one initial genome, each weight-perturbed independently."""
    rng = substream(config.rng_seed, "init")
    seed_genome = init_genome(config.initial_layers, config.n_wires, registry, rng)
    return [Agent(mutate_weights(seed_genome, config.sigma, 1.0, rng)) for _ in range(config.population)]


def generation_record(generation: int, agents: Sequence[Agent], n_species: int, evals: int) -> GenerationRecord:
    order = ranked(agents)
    fits = [a.fitness for a in order]
    best = order[0].genome
    return GenerationRecord(
        generation=generation,
        best_fitness=fits[0],
        top5_mean=float(np.mean(fits[:5])),
        pop_mean=float(np.mean(fits)),
        n_rot=best.n_rot,
        n_cnot=best.n_cnot,
        n_gates=best.n_gates,
        n_species=n_species,
        evals_cumulative=evals,
    )


def best_of(agents: Sequence[Agent], incumbent: Optional[Agent]) -> Agent:
    """Best-so-far update; later agents win ties so re-confirmed champions replace lucky ones."""
    for agent in agents:
        if incumbent is None or _fitness(agent) >= _fitness(incumbent):
            incumbent = agent
    return incumbent


GenerationHook = Callable[[GenerationRecord, Sequence[Agent]], None]


def evolve(
    config: EvolutionConfig,
    fitness_fn: FitnessFn,
    on_generation: Optional[GenerationHook] = None,
) -> tuple[Agent, list[GenerationRecord]]:
    """Run the generational loop and return the best agent ever seen plus one record per generation.

    ``fitness_fn(genome, rng)`` scores a genome; when it has a ``batch(genomes, rngs)``
    attribute the whole population is scored in one call. ``on_generation`` may
    annotate each record (e.g. with a sampling accuracy) before it is stored.
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
        if on_generation is not None:
            on_generation(record, population)
        history.append(record)

        counts = allocate_offspring(species, config.population)
        rng = substream(config.rng_seed, "reproduce", gen)
        population = []
        representatives = []
        for sp, count in zip(species, counts):
            if count == 0:
                continue
            representatives.append(sp.best())
            population.extend(reproduce(sp, count, config, registry, rng, generation=gen + 1))
        evaluate(population, gen + 1)
        best = best_of(ranked(population)[::-1], best)
    return best, history
