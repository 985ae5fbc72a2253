"""Quantum policies for the RL tasks and their episode-return fitness.

Two evaluation routes exist. ``policy_action`` runs the gate-level
simulator and is the reference. ``rl_fitness_batch`` collapses every
genome to its unitary and rolls all agents' episodes in lockstep, which
is what the evolution loop uses.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..genome import Genome, reconstruct_circuit
from ..sim import RX, Gate, apply_gates, circuit_unitary, expectation_z, new_statevector, z_signs
from . import cartpole as cp
from . import frozenlake as fl

CARTPOLE = "cartpole"
FROZENLAKE = "frozenlake8x8"


class EnvSpec:
    def __init__(self, name: str, n_wires: int, n_actions: int):
        self.name = name
        self.n_wires = n_wires
        self.n_actions = n_actions


ENVS = {
    CARTPOLE: EnvSpec(CARTPOLE, 4, 2),
    FROZENLAKE: EnvSpec(FROZENLAKE, 6, 4),
}


def env_spec(name: str) -> EnvSpec:
    try:
        return ENVS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVS)}") from None


def encode_cartpole(obs: Sequence[float]) -> list[Gate]:
    if len(obs) != 4:
        raise ValueError("cart-pole observations have four components")
    return [RX(i, float(v)) for i, v in enumerate(obs)]


def square_bits(square: int) -> list[int]:
    if not 0 <= square < fl.N_SQUARES:
        raise ValueError(f"square must be in [0, {fl.N_SQUARES}), got {square}")
    return [int(b) for b in format(square, "06b")]


def encode_frozenlake(square: int) -> list[Gate]:
    return [RX(i, np.pi * b) for i, b in enumerate(square_bits(square))]


def policy_action(genome: Genome, encoding: Sequence[Gate], n_actions: int) -> int:
    """Greedy action: argmax of <Z_i> over the first ``n_actions`` wires, lowest index on ties."""
    n = genome.n_wires
    if n_actions > n:
        raise ValueError("more actions than measured wires")
    state = apply_gates(new_statevector(n), list(encoding) + reconstruct_circuit(genome))
    values = [expectation_z(state, w) for w in range(n_actions)]
    return int(np.argmax(values))


# Batched rollouts ------------------------------------------------------------

def genome_unitaries(genomes: Sequence[Genome], n_wires: int) -> np.ndarray:
    for g in genomes:
        if g.n_wires != n_wires:
            raise ValueError(f"genome has {g.n_wires} wires, environment needs {n_wires}")
    return np.stack([circuit_unitary(reconstruct_circuit(g), n_wires) for g in genomes])


def _rx_product_states(obs: np.ndarray) -> np.ndarray:
    """``prod_i RX(obs_i)|0>`` for obs of shape (..., 4) -> amplitudes (..., 16)."""
    half = obs / 2
    qubit = np.stack([np.cos(half), -1j * np.sin(half)], axis=-1)
    out = qubit[..., 0, :]
    for i in range(1, obs.shape[-1]):
        out = (out[..., :, None] * qubit[..., i, None, :]).reshape(*obs.shape[:-1], -1)
    return out


def _greedy_actions(probs: np.ndarray, n_wires: int, n_actions: int) -> np.ndarray:
    z = probs @ z_signs(n_wires)[:n_actions].T
    return np.argmax(z, axis=-1)


def cartpole_returns(genomes: Sequence[Genome], episodes: int, rngs: Sequence[np.random.Generator]) -> np.ndarray:
    """Undiscounted return of every episode, shape ``(len(genomes), episodes)``."""
    unitaries = genome_unitaries(genomes, 4)
    n_agents = len(genomes)
    start = np.stack([rng.uniform(-0.05, 0.05, size=(episodes, 4)) for rng in rngs])
    x, x_dot, theta, theta_dot = (start[..., k].copy() for k in range(4))
    returns = np.zeros((n_agents, episodes))
    alive = np.ones((n_agents, episodes), dtype=bool)
    for _ in range(cp.MAX_STEPS):
        obs = np.stack([x, x_dot, theta, theta_dot], axis=-1)
        psi = np.einsum("aij,aej->aei", unitaries, _rx_product_states(obs))
        actions = _greedy_actions(np.abs(psi) ** 2, 4, 2)
        force = np.where(actions == 1, cp.FORCE_MAG, -cp.FORCE_MAG)
        x_acc, theta_acc = cp.accelerations(theta, theta_dot, force)
        x, x_dot, theta, theta_dot = (
            np.where(alive, x + cp.TAU * x_dot, x),
            np.where(alive, x_dot + cp.TAU * x_acc, x_dot),
            np.where(alive, theta + cp.TAU * theta_dot, theta),
            np.where(alive, theta_dot + cp.TAU * theta_acc, theta_dot),
        )
        returns += alive
        alive &= (np.abs(x) <= cp.X_LIMIT) & (np.abs(theta) <= cp.THETA_LIMIT)
        if not alive.any():
            break
    return returns


def frozenlake_policy_table(genomes: Sequence[Genome]) -> np.ndarray:
    """Greedy action for every square, shape ``(len(genomes), 64)``.

    RX(pi * bit) on |0> flips the bit up to a phase, so the encoded state of
    square ``s`` is the basis state ``|s>`` and the circuit output is column
    ``s`` of the unitary.
    """
    unitaries = genome_unitaries(genomes, 6)
    probs = np.abs(np.transpose(unitaries, (0, 2, 1))) ** 2
    return _greedy_actions(probs, 6, 4)


def frozenlake_returns(genomes: Sequence[Genome], episodes: int) -> np.ndarray:
    table = frozenlake_policy_table(genomes)
    out = np.zeros((len(genomes), episodes))
    for a in range(len(genomes)):
        state, total = fl.FrozenLakeState(), 0.0
        while not state.done:
            state, reward, _ = fl.frozenlake_step(state, int(table[a, state.square]))
            total += reward
        out[a, :] = total
    return out


def rl_fitness_batch(
    genomes: Sequence[Genome], env: str, episodes: int, rngs: Sequence[np.random.Generator]
) -> np.ndarray:
    """Mean episode return per genome; ``rngs[i]`` drives genome ``i``'s episodes."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if len(rngs) != len(genomes):
        raise ValueError("need one random generator per genome")
    if not genomes:
        return np.zeros(0)
    if env == CARTPOLE:
        returns = cartpole_returns(genomes, episodes, rngs)
    elif env == FROZENLAKE:
        returns = frozenlake_returns(genomes, episodes)
    else:
        env_spec(env)
    return returns.mean(axis=1)


def rl_fitness(genome: Genome, env: str, episodes: int, rng: np.random.Generator) -> float:
    return float(rl_fitness_batch([genome], env, episodes, [rng])[0])


def rollout_reference(genome: Genome, env: str, rng: np.random.Generator) -> float:
    """One episode through the gate-level simulator; slow, used to cross-check the batch path."""
    total = 0.0
    if env == CARTPOLE:
        state = cp.cartpole_reset(rng)
        while not state.done:
            action = policy_action(genome, encode_cartpole(state.observation), 2)
            state, reward, _ = cp.cartpole_step(state, action)
            total += reward
    elif env == FROZENLAKE:
        state = fl.FrozenLakeState()
        while not state.done:
            action = policy_action(genome, encode_frozenlake(state.square), 4)
            state, reward, _ = fl.frozenlake_step(state, action)
            total += reward
    else:
        env_spec(env)
    return total


class RLFitness:
    """Fitness callable for the evolution loop, with a population-wide ``batch`` path."""

    def __init__(self, env: str, episodes: int = 3):
        self.env = env_spec(env).name
        self.n_wires = ENVS[env].n_wires
        self.episodes = episodes

    def __call__(self, genome: Genome, rng: np.random.Generator) -> float:
        return rl_fitness(genome, self.env, self.episodes, rng)

    def batch(self, genomes: Sequence[Genome], rngs: Sequence[np.random.Generator]) -> np.ndarray:
        return rl_fitness_batch(genomes, self.env, self.episodes, rngs)
