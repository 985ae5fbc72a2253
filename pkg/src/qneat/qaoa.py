"""Fixed-ansatz QAOA trained by finite-difference gradient ascent (comparison baseline)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sim import CNOT, RX, RZ, Gate, H, Statevector, apply_gates, new_statevector
from .tasks.maxcut import Graph, maxcut_observable

FD_STEP = 1e-4


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        if len(self.gammas) != len(self.betas) or not self.gammas:
            raise ValueError("need p >= 1 cost angles and as many mixer angles")

    @property
    def p(self) -> int:
        return len(self.gammas)

    def as_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas, dtype=float)

    @classmethod
    def from_vector(cls, vec) -> QaoaParams:
        vec = [float(v) for v in vec]
        half = len(vec) // 2
        return cls(tuple(vec[:half]), tuple(vec[half:]))

    @classmethod
    def ramp(cls, p: int, scale: float = 0.8) -> QaoaParams:
        """Linear schedule: cost angle magnitudes ramp up, mixer angles ramp down.

        Cost angles are negative because the cost block is exp(-i gamma Z Z),
        the opposite sign of exp(-i gamma H_edge).
        """
        if p < 1:
            raise ValueError("p must be >= 1")
        t = (np.arange(p) + 0.5) / p
        return cls(tuple(-scale * t / 2), tuple(scale * (1 - t)))


def qaoa_circuit(graph: Graph, params: QaoaParams) -> list[Gate]:
    """|+>^n, then per layer a CNOT-RZ(2 gamma)-CNOT block per edge and RX(2 beta) on every wire."""
    gates: list[Gate] = [H(w) for w in range(graph.n_nodes)]
    for gamma, beta in zip(params.gammas, params.betas):
        for u, v in graph.edges:
            gates += [CNOT(u, v), RZ(v, 2 * gamma), CNOT(u, v)]
        gates += [RX(w, 2 * beta) for w in range(graph.n_nodes)]
    return gates


def gate_count(graph: Graph, p: int) -> int:
    """Ansatz gates excluding the initial Hadamards: 3 per edge plus one mixer per node, per layer."""
    return p * (3 * len(graph.edges) + graph.n_nodes)


def gate_breakdown(graph: Graph, p: int) -> tuple[int, int]:
    """``(rotations, cnots)`` in the ansatz."""
    return p * (len(graph.edges) + graph.n_nodes), 2 * p * len(graph.edges)


def qaoa_state(graph: Graph, params: QaoaParams) -> Statevector:
    return apply_gates(new_statevector(graph.n_nodes), qaoa_circuit(graph, params))


class _Objective:
    def __init__(self, graph: Graph):
        self.graph = graph
        self.diag = maxcut_observable(graph).diagonal(graph.n_nodes)
        self.calls = 0

    def __call__(self, vec: np.ndarray) -> float:
        self.calls += 1
        return float(qaoa_state(self.graph, QaoaParams.from_vector(vec)).probabilities @ self.diag)


def qaoa_expectation(graph: Graph, params: QaoaParams) -> float:
    return _Objective(graph)(params.as_vector())


def _central_difference(f, vec: np.ndarray, step: float) -> np.ndarray:
    grad = np.zeros_like(vec)
    for k in range(vec.size):
        up, down = vec.copy(), vec.copy()
        up[k] += step
        down[k] -= step
        grad[k] = (f(up) - f(down)) / (2 * step)
    return grad


def qaoa_gradient(graph: Graph, params: QaoaParams, step: float = FD_STEP) -> np.ndarray:
    """d<H>/d(gammas, betas) by central differences."""
    return _central_difference(_Objective(graph), params.as_vector(), step)


@dataclass
class QaoaRun:
    params: QaoaParams
    expectations: list[float] = field(default_factory=list)
    evaluations: list[int] = field(default_factory=list)
    trajectory: list[QaoaParams] = field(default_factory=list)
    n_gates: int = 0
    n_rot: int = 0
    n_cnot: int = 0


def qaoa_optimize(
    graph: Graph,
    p: int,
    learning_rate: float = 0.01,
    epochs: int = 100,
    init: QaoaParams | None = None,
) -> QaoaRun:
    """Plain gradient ascent on <H>; one gradient step per epoch.

    ``expectations[k]`` and ``trajectory[k]`` are <H> and the parameters after
    epoch ``k``; ``evaluations[k]`` counts circuit evaluations spent so far.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    objective = _Objective(graph)
    vec = (init or QaoaParams.ramp(p)).as_vector()
    if vec.size != 2 * p:
        raise ValueError("initial parameters do not match p")
    n_rot, n_cnot = gate_breakdown(graph, p)
    run = QaoaRun(QaoaParams.from_vector(vec), n_gates=gate_count(graph, p), n_rot=n_rot, n_cnot=n_cnot)
    for _ in range(epochs):
        vec = vec + learning_rate * _central_difference(objective, vec, FD_STEP)
        if not np.all(np.isfinite(vec)):
            raise DivergenceError("QAOA parameters became non-finite")
        value = objective(vec)
        if not np.isfinite(value):
            raise DivergenceError("QAOA expectation became non-finite")
        run.expectations.append(value)
        run.evaluations.append(objective.calls)
        run.trajectory.append(QaoaParams.from_vector(vec))
    run.params = QaoaParams.from_vector(vec)
    return run
