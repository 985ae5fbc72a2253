"""MaxCut instances, the cut Hamiltonian, and sampling accuracy."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from ..genome import Genome, reconstruct_circuit
from ..sim import H, Observable, Statevector, apply_gates, expectation_observable, new_statevector, sample_bitstrings, z_signs

BENCHMARKS = ("random", "ladder", "barbell", "caveman")
MAX_BRUTE_FORCE_NODES = 20


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        normalized = []
        for u, v in self.edges:
            if u == v:
                raise GraphError(f"self-loop on node {u}")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise GraphError(f"edge ({u}, {v}) outside [0, {self.n_nodes})")
            normalized.append((min(u, v), max(u, v)))
        if len(set(normalized)) != len(normalized):
            raise GraphError("duplicate edge")
        object.__setattr__(self, "edges", tuple(normalized))

    def to_text(self) -> str:
        return f"{self.n_nodes}\n" + "".join(f"{u} {v}\n" for u, v in self.edges)


def parse_graph(text: str) -> Graph:
    """Edge-list format: node count on the first data line, then ``u v`` per line; ``#`` starts a comment."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError("empty graph file")
    try:
        n = int(lines[0])
        edges = []
        for ln in lines[1:]:
            u, v = ln.split()
            edges.append((int(u), int(v)))
    except ValueError as exc:
        raise GraphError(f"malformed graph file: {exc}") from exc
    return Graph(n, tuple(edges))


def load_graph(path: str | Path) -> Graph:
    return parse_graph(Path(path).read_text())


@lru_cache(maxsize=None)
def benchmark_graph(name: str) -> Graph:
    if name not in BENCHMARKS:
        raise GraphError(f"unknown benchmark graph {name!r}; choose from {BENCHMARKS}")
    text = resources.files("qneat").joinpath("data").joinpath("graphs").joinpath(f"{name}.txt").read_text()
    return parse_graph(text)


def benchmark_graphs() -> dict[str, Graph]:
    return {name: benchmark_graph(name) for name in BENCHMARKS}


def resolve_graph(spec: str) -> Graph:
    """A benchmark name or a path to an edge-list file."""
    if spec in BENCHMARKS:
        return benchmark_graph(spec)
    return load_graph(spec)


def maxcut_observable(graph: Graph) -> Observable:
    """Sum over edges of (1 - Z_u Z_v) / 2, written as identity and ZZ terms."""
    if not graph.edges:
        raise GraphError("MaxCut needs at least one edge")
    terms = []
    for u, v in graph.edges:
        terms.append((0.5, frozenset()))
        terms.append((-0.5, frozenset((u, v))))
    return Observable(tuple(terms))


def cut_values(graph: Graph) -> np.ndarray:
    """Number of cut edges for every basis state (wire 0 = node 0 = most significant bit)."""
    signs = z_signs(graph.n_nodes)
    values = np.zeros(2**graph.n_nodes, dtype=np.int64)
    for u, v in graph.edges:
        values += signs[u] != signs[v]
    return values


def brute_force_maxcut(graph: Graph) -> tuple[int, frozenset[str]]:
    if graph.n_nodes > MAX_BRUTE_FORCE_NODES:
        raise GraphError(f"brute force limited to {MAX_BRUTE_FORCE_NODES} nodes")
    values = cut_values(graph)
    best = int(values.max())
    cuts = frozenset(format(int(k), f"0{graph.n_nodes}b") for k in np.flatnonzero(values == best))
    return best, cuts


def cut_size(graph: Graph, bitstring: str) -> int:
    return sum(bitstring[u] != bitstring[v] for u, v in graph.edges)


def maxcut_state(genome: Genome, graph: Graph) -> Statevector:
    """Uniform superposition followed by the genome's circuit."""
    if genome.n_wires != graph.n_nodes:
        raise GraphError(f"genome has {genome.n_wires} wires but graph has {graph.n_nodes} nodes")
    n = graph.n_nodes
    gates = [H(w) for w in range(n)] + reconstruct_circuit(genome)
    return apply_gates(new_statevector(n), gates)


def maxcut_fitness(genome: Genome, graph: Graph) -> float:
    return expectation_observable(maxcut_state(genome, graph), maxcut_observable(graph))


def sampling_accuracy(state: Statevector, graph: Graph, samples: int, rng: np.random.Generator) -> float:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    _, optimal = brute_force_maxcut(graph)
    draws = sample_bitstrings(state, rng, samples)
    return sum(b in optimal for b in draws) / samples


def maxcut_accuracy(genome: Genome, graph: Graph, samples: int = 100, rng: np.random.Generator | None = None) -> float:
    rng = np.random.default_rng() if rng is None else rng
    return sampling_accuracy(maxcut_state(genome, graph), graph, samples, rng)


@dataclass(frozen=True)
class MaxCutResult:
    expectation: float
    accuracy: float
    optimal_value: int
    optimal_cuts: frozenset[str]


def evaluate_maxcut(genome: Genome, graph: Graph, rng: np.random.Generator, samples: int = 100) -> MaxCutResult:
    state = maxcut_state(genome, graph)
    value, cuts = brute_force_maxcut(graph)
    return MaxCutResult(
        expectation=expectation_observable(state, maxcut_observable(graph)),
        accuracy=sampling_accuracy(state, graph, samples, rng),
        optimal_value=value,
        optimal_cuts=cuts,
    )


class MaxCutFitness:
    """Expected cut size; ignores the random stream since the expectation is exact."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self._diag = maxcut_observable(graph).diagonal(graph.n_nodes)

    @property
    def n_wires(self) -> int:
        return self.graph.n_nodes

    def __call__(self, genome: Genome, rng: np.random.Generator | None = None) -> float:
        return float(maxcut_state(genome, self.graph).probabilities @ self._diag)
