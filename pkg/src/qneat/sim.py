"""Dense statevector simulator.

Conventions: wire 0 is the most significant bit of the basis index, and
bitstrings list wire 0 first. ``ROT(tx, ty, tz)`` is ``Rz(tz) @ Ry(ty) @ Rx(tx)``,
i.e. the x rotation acts first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import cos, sin, sqrt
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 12
NORM_TOL = 1e-10


class SimulationError(ValueError):
    pass


# Gates ---------------------------------------------------------------------

@dataclass(frozen=True)
class Rot:
    wire: int
    tx: float = 0.0
    ty: float = 0.0
    tz: float = 0.0


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise SimulationError("CNOT control and target must differ")


@dataclass(frozen=True)
class RX:
    wire: int
    theta: float


@dataclass(frozen=True)
class RZ:
    wire: int
    theta: float


@dataclass(frozen=True)
class H:
    wire: int


Gate = Rot | CNOT | RX | RZ | H

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def rot_matrix(tx: float, ty: float, tz: float) -> np.ndarray:
    return rz_matrix(tz) @ ry_matrix(ty) @ rx_matrix(tx)


def gate_matrix(gate: Gate) -> np.ndarray:
    """2x2 matrix of a single-qubit gate."""
    if isinstance(gate, Rot):
        return rot_matrix(gate.tx, gate.ty, gate.tz)
    if isinstance(gate, RX):
        return rx_matrix(gate.theta)
    if isinstance(gate, RZ):
        return rz_matrix(gate.theta)
    if isinstance(gate, H):
        return _HADAMARD
    raise SimulationError(f"{gate!r} is not a single-qubit gate")


def gate_wires(gate: Gate) -> tuple[int, ...]:
    if isinstance(gate, CNOT):
        return (gate.control, gate.target)
    return (gate.wire,)


# Kernels on batches of raw amplitude arrays, shape (batch, 2**n) -------------

@lru_cache(maxsize=512)
def _cnot_permutation(control: int, target: int, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def _apply_1q(amps: np.ndarray, matrix: np.ndarray, wire: int, n: int) -> np.ndarray:
    batch = amps.shape[0]
    view = amps.reshape(batch, 2**wire, 2, 2 ** (n - wire - 1))
    out = np.einsum("ij,bajc->baic", matrix, view)
    return out.reshape(batch, 2**n)


def apply_gates_batch(amps: np.ndarray, gates: Iterable[Gate], n: int) -> np.ndarray:
    """Apply ``gates`` in order to every row of ``amps`` (shape ``(batch, 2**n)``)."""
    for gate in gates:
        for w in gate_wires(gate):
            if not 0 <= w < n:
                raise SimulationError(f"wire {w} out of range for {n} qubits")
        if isinstance(gate, CNOT):
            amps = amps[:, _cnot_permutation(gate.control, gate.target, n)]
        else:
            amps = _apply_1q(amps, gate_matrix(gate), gate.wire, n)
    return amps


def circuit_unitary(gates: Sequence[Gate], n: int) -> np.ndarray:
    """Full ``2**n x 2**n`` unitary of a gate sequence."""
    columns = apply_gates_batch(np.eye(2**n, dtype=complex), gates, n)
    return columns.T


@lru_cache(maxsize=64)
def z_signs(n: int) -> np.ndarray:
    """``z_signs(n)[w, k]`` is the Z eigenvalue (+1/-1) of wire ``w`` in basis state ``k``."""
    idx = np.arange(2**n)
    bits = (idx[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
    out = 1 - 2 * bits
    out.flags.writeable = False
    return out


# Statevector ---------------------------------------------------------------

@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise SimulationError("amplitude vector has wrong length")

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def new_statevector(n_qubits: int) -> Statevector:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SimulationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return Statevector(n_qubits, amps)


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    return apply_gates(state, (gate,))


def apply_gates(state: Statevector, gates: Iterable[Gate]) -> Statevector:
    n = state.n_qubits
    amps = apply_gates_batch(state.amplitudes[None, :], gates, n)[0]
    return Statevector(n, amps)


def _check_wire(state: Statevector, wire: int) -> None:
    if not 0 <= wire < state.n_qubits:
        raise SimulationError(f"wire {wire} out of range for {state.n_qubits} qubits")


def expectation_z(state: Statevector, wire: int) -> float:
    _check_wire(state, wire)
    return float(state.probabilities @ z_signs(state.n_qubits)[wire])


@dataclass(frozen=True)
class Observable:
    """Sum of ``coefficient * prod(Z_w for w in support)``; an empty support is the identity."""

    terms: tuple[tuple[float, frozenset[int]], ...]

    def __post_init__(self):
        for coeff, _ in self.terms:
            if not np.isfinite(coeff):
                raise SimulationError("observable coefficients must be finite")

    def diagonal(self, n: int) -> np.ndarray:
        """Eigenvalue of the observable on each computational basis state."""
        signs = z_signs(n)
        diag = np.zeros(2**n)
        for coeff, support in self.terms:
            for w in support:
                if not 0 <= w < n:
                    raise SimulationError(f"observable wire {w} out of range for {n} qubits")
            term = np.ones(2**n)
            for w in support:
                term = term * signs[w]
            diag += coeff * term
        return diag


def expectation_observable(state: Statevector, obs: Observable) -> float:
    return float(state.probabilities @ obs.diagonal(state.n_qubits))


def index_to_bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def sample_bitstring(state: Statevector, rng: np.random.Generator) -> str:
    return sample_bitstrings(state, rng, 1)[0]


def sample_bitstrings(state: Statevector, rng: np.random.Generator, shots: int) -> list[str]:
    probs = state.probabilities
    probs = probs / probs.sum()
    draws = rng.choice(probs.size, size=shots, p=probs)
    return [index_to_bitstring(int(k), state.n_qubits) for k in draws]
