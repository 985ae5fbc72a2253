"""Fitness backends: cart-pole, frozen lake and MaxCut."""
from .cartpole import CartPoleState, EpisodeOver, cartpole_reset, cartpole_step
from .frozenlake import FrozenLakeState, frozenlake_step
from .maxcut import (
    Graph,
    GraphError,
    MaxCutFitness,
    MaxCutResult,
    benchmark_graph,
    benchmark_graphs,
    brute_force_maxcut,
    evaluate_maxcut,
    load_graph,
    maxcut_accuracy,
    maxcut_fitness,
    maxcut_observable,
    parse_graph,
)
from .rl import (
    CARTPOLE,
    FROZENLAKE,
    RLFitness,
    encode_cartpole,
    encode_frozenlake,
    policy_action,
    rl_fitness,
    rl_fitness_batch,
)
