"""Genetic encoding of constrained-architecture circuits and the genetic operators.

A circuit is a stack of layers. Each layer holds at most one ROT per wire,
followed by CNOTs from wire ``w`` to ``(w + 1) % m``. A genome keeps the ROT
and CNOT genes in two separate lists sorted by innovation number, because
the two gate types never compete for the same slot.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

import numpy as np

from .sim import CNOT, Gate, Rot

ROT = "ROT"
CNOT_KIND = "CNOT"
TWO_PI = 2 * np.pi


class GenomeError(ValueError):
    pass


@dataclass(frozen=True)
class RotGene:
    layer: int
    wire: int
    angles: tuple[float, float, float]
    innovation: int

    @property
    def slot(self) -> tuple[int, int]:
        return (self.layer, self.wire)


@dataclass(frozen=True)
class CnotGene:
    layer: int
    wire_from: int
    innovation: int

    @property
    def slot(self) -> tuple[int, int]:
        return (self.layer, self.wire_from)

    def wire_to(self, n_wires: int) -> int:
        return (self.wire_from + 1) % n_wires


@dataclass(frozen=True)
class Genome:
    n_wires: int
    rot_genes: tuple[RotGene, ...] = ()
    cnot_genes: tuple[CnotGene, ...] = ()

    def __post_init__(self):
        if self.n_wires < 1:
            raise GenomeError("a genome needs at least one wire")
        object.__setattr__(self, "rot_genes", tuple(sorted(self.rot_genes, key=_innov)))
        object.__setattr__(self, "cnot_genes", tuple(sorted(self.cnot_genes, key=_innov)))
        for genes in (self.rot_genes, self.cnot_genes):
            innovs = [g.innovation for g in genes]
            if len(set(innovs)) != len(innovs):
                raise GenomeError("duplicate innovation number in genome")
            slots = [g.slot for g in genes]
            if len(set(slots)) != len(slots):
                raise GenomeError("two genes occupy the same (layer, wire) slot")
            for layer, wire in slots:
                if layer < 1 or not 0 <= wire < self.n_wires:
                    raise GenomeError(f"slot ({layer}, {wire}) outside the layout")

    @property
    def n_rot(self) -> int:
        return len(self.rot_genes)

    @property
    def n_cnot(self) -> int:
        return len(self.cnot_genes)

    @property
    def n_gates(self) -> int:
        return self.n_rot + self.n_cnot

    @property
    def depth(self) -> int:
        layers = [g.layer for g in self.rot_genes] + [g.layer for g in self.cnot_genes]
        return max(layers, default=0)

    def structure(self) -> frozenset[tuple[str, int, int, int]]:
        """Set of ``(kind, layer, wire, innovation)`` tuples, ignoring angles."""
        return frozenset(
            [(ROT, g.layer, g.wire, g.innovation) for g in self.rot_genes]
            + [(CNOT_KIND, g.layer, g.wire_from, g.innovation) for g in self.cnot_genes]
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_wires": self.n_wires,
            "rot": [
                {"layer": g.layer, "wire": g.wire, "angles": list(g.angles), "innovation": g.innovation}
                for g in self.rot_genes
            ],
            "cnot": [
                {
                    "layer": g.layer,
                    "wire_from": g.wire_from,
                    "wire_to": g.wire_to(self.n_wires),
                    "innovation": g.innovation,
                }
                for g in self.cnot_genes
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Genome:
        try:
            n = int(data["n_wires"])
            rots = [
                RotGene(int(r["layer"]), int(r["wire"]), tuple(float(a) for a in r["angles"]), int(r["innovation"]))
                for r in data["rot"]
            ]
            cnots = [CnotGene(int(c["layer"]), int(c["wire_from"]), int(c["innovation"])) for c in data["cnot"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise GenomeError(f"malformed genome record: {exc}") from exc
        if any(len(r.angles) != 3 for r in rots):
            raise GenomeError("ROT genes need exactly three angles")
        return cls(n, tuple(rots), tuple(cnots))


def _innov(gene) -> int:
    return gene.innovation


class InnovationRegistry:
    """Global (kind, layer, wire) -> innovation map.

    ROT and CNOT genes are numbered by separate counters, since they are
    only ever compared within their own list. Lookups are atomic.
    """

    def __init__(self):
        self._numbers: dict[tuple[str, int, int], int] = {}
        self._next = {ROT: 1, CNOT_KIND: 1}
        self._lock = threading.Lock()

    def innovation(self, kind: str, layer: int, wire: int) -> int:
        key = (kind, layer, wire)
        with self._lock:
            number = self._numbers.get(key)
            if number is None:
                number = self._next[kind]
                self._next[kind] += 1
                self._numbers[key] = number
            return number

    def __len__(self) -> int:
        return len(self._numbers)

    def to_dict(self) -> dict[str, Any]:
        with self._lock:
            return {
                "next": dict(self._next),
                "entries": [[k, l, w, n] for (k, l, w), n in sorted(self._numbers.items(), key=lambda kv: (kv[0][0], kv[1]))],
            }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> InnovationRegistry:
        reg = cls()
        reg._next = {k: int(v) for k, v in data["next"].items()}
        reg._numbers = {(k, int(l), int(w)): int(n) for k, l, w, n in data["entries"]}
        return reg


# Circuit reconstruction ----------------------------------------------------

def reconstruct_circuit(genome: Genome) -> list[Gate]:
    """Gates in execution order: per layer, ROTs by wire, then CNOTs by control wire."""
    m = genome.n_wires
    gates: list[tuple[tuple[int, int, int], Gate]] = []
    for g in genome.rot_genes:
        gates.append(((g.layer, 0, g.wire), Rot(g.wire, *g.angles)))
    for g in genome.cnot_genes:
        gates.append(((g.layer, 1, g.wire_from), CNOT(g.wire_from, g.wire_to(m))))
    gates.sort(key=lambda item: item[0])
    return [gate for _, gate in gates]


# Crossover -----------------------------------------------------------------

def _cross_list(genes_a, genes_b, a_fitter: bool | None, rng: np.random.Generator):
    by_innov_b = {g.innovation: g for g in genes_b}
    innovs_a = {g.innovation for g in genes_a}
    child = []
    for g in genes_a:
        other = by_innov_b.get(g.innovation)
        if other is not None:
            child.append(g if rng.random() < 0.5 else other)
        elif a_fitter is None:
            if rng.random() < 0.5:
                child.append(g)
        elif a_fitter:
            child.append(g)
    for g in genes_b:
        if g.innovation in innovs_a:
            continue
        if a_fitter is None:
            if rng.random() < 0.5:
                child.append(g)
        elif not a_fitter:
            child.append(g)
    return tuple(child)


def crossover(a: Genome, b: Genome, fitness_a: float, fitness_b: float, rng: np.random.Generator) -> Genome:
    """Recombine two genomes aligned by innovation number.

    Matching genes come from either parent with equal probability. Genes
    present in only one parent are inherited from the fitter parent, or
    kept with probability 1/2 each when the fitnesses tie.
    """
    if a.n_wires != b.n_wires:
        raise GenomeError(f"wire count mismatch: {a.n_wires} vs {b.n_wires}")
    if fitness_a > fitness_b:
        a_fitter = True
    elif fitness_b > fitness_a:
        a_fitter = False
    else:
        a_fitter = None
    rots = _cross_list(a.rot_genes, b.rot_genes, a_fitter, rng)
    cnots = _cross_list(a.cnot_genes, b.cnot_genes, a_fitter, rng)
    return Genome(a.n_wires, rots, cnots)


# Mutation ------------------------------------------------------------------

def mutate_weights(genome: Genome, sigma: float, p_w: float, rng: np.random.Generator) -> Genome:
    if sigma <= 0:
        raise GenomeError("sigma must be positive")
    if not 0.0 <= p_w <= 1.0:
        raise GenomeError("p_w must lie in [0, 1]")
    if p_w == 0.0 or not genome.rot_genes:
        return genome
    genes = []
    for g in genome.rot_genes:
        if rng.random() < p_w:
            delta = rng.normal(0.0, sigma, size=3)
            g = replace(g, angles=tuple(float(a + d) for a, d in zip(g.angles, delta)))
        genes.append(g)
    return replace(genome, rot_genes=tuple(genes))


def free_slots(occupied: Iterable[tuple[int, int]], n_wires: int, max_layer: int) -> list[tuple[int, int]]:
    """Empty (layer, wire) slots in layers ``1..max_layer + 1``."""
    taken = set(occupied)
    return [
        (layer, wire)
        for layer in range(1, max_layer + 2)
        for wire in range(n_wires)
        if (layer, wire) not in taken
    ]


def random_angles(rng: np.random.Generator) -> tuple[float, float, float]:
    return tuple(float(a) for a in rng.uniform(0.0, TWO_PI, size=3))


def mutate_add_rot(genome: Genome, registry: InnovationRegistry, rng: np.random.Generator) -> Genome:
    slots = free_slots((g.slot for g in genome.rot_genes), genome.n_wires, genome.depth)
    layer, wire = slots[rng.integers(len(slots))]
    gene = RotGene(layer, wire, random_angles(rng), registry.innovation(ROT, layer, wire))
    return replace(genome, rot_genes=genome.rot_genes + (gene,))


def mutate_add_cnot(genome: Genome, registry: InnovationRegistry, rng: np.random.Generator) -> Genome:
    slots = free_slots((g.slot for g in genome.cnot_genes), genome.n_wires, genome.depth)
    layer, wire = slots[rng.integers(len(slots))]
    gene = CnotGene(layer, wire, registry.innovation(CNOT_KIND, layer, wire))
    return replace(genome, cnot_genes=genome.cnot_genes + (gene,))


def init_genome(n_layers: int, n_wires: int, registry: InnovationRegistry, rng: np.random.Generator) -> Genome:
    """Genome with ``n_layers`` completely filled layers and random angles."""
    if n_layers < 0:
        raise GenomeError("initial layer count must be nonnegative")
    rots, cnots = [], []
    for layer in range(1, n_layers + 1):
        for wire in range(n_wires):
            rots.append(RotGene(layer, wire, random_angles(rng), registry.innovation(ROT, layer, wire)))
        for wire in range(n_wires):
            cnots.append(CnotGene(layer, wire, registry.innovation(CNOT_KIND, layer, wire)))
    return Genome(n_wires, tuple(rots), tuple(cnots))


# Compatibility distance ----------------------------------------------------

@dataclass
class _GeneCounts:
    excess: int = 0
    disjoint: int = 0
    weight_diffs: list[float] = field(default_factory=list)


def _count_list(genes_a, genes_b, counts: _GeneCounts) -> None:
    innov_a = {g.innovation: g for g in genes_a}
    innov_b = {g.innovation: g for g in genes_b}
    max_a = max(innov_a, default=0)
    max_b = max(innov_b, default=0)
    for k, g in innov_a.items():
        if k in innov_b:
            if isinstance(g, RotGene):
                diff = np.subtract(g.angles, innov_b[k].angles)
                counts.weight_diffs.append(float(np.sqrt(diff @ diff)))
        elif k > max_b:
            counts.excess += 1
        else:
            counts.disjoint += 1
    for k in innov_b:
        if k in innov_a:
            continue
        if k > max_a:
            counts.excess += 1
        else:
            counts.disjoint += 1


def gene_counts(a: Genome, b: Genome) -> tuple[int, int, float]:
    """``(excess, disjoint, mean matching-angle distance)`` pooled over both gene lists."""
    counts = _GeneCounts()
    _count_list(a.rot_genes, b.rot_genes, counts)
    _count_list(a.cnot_genes, b.cnot_genes, counts)
    w_bar = float(np.mean(counts.weight_diffs)) if counts.weight_diffs else 0.0
    return counts.excess, counts.disjoint, w_bar


def compatibility_distance(a: Genome, b: Genome, c1: float, c2: float, c3: float) -> float:
    excess, disjoint, w_bar = gene_counts(a, b)
    n = max(a.n_gates, b.n_gates) or 1
    return c1 * excess / n + c2 * disjoint / n + c3 * w_bar
