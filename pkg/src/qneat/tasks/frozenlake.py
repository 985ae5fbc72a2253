"""Deterministic (non-slippery) FrozenLake on the standard 8x8 map."""
from __future__ import annotations

from dataclasses import dataclass

from .cartpole import EpisodeOver

MAP_8X8 = (
    "SFFFFFFF",
    "FFFFFFFF",
    "FFFHFFFF",
    "FFFFFHFF",
    "FFFHFFFF",
    "FHHFFFHF",
    "FHFFHFHF",
    "FFFHFFFG",
)
SIZE = 8
N_SQUARES = SIZE * SIZE
GOAL = N_SQUARES - 1
HOLES = frozenset(r * SIZE + c for r, row in enumerate(MAP_8X8) for c, ch in enumerate(row) if ch == "H")
MAX_STEPS = 200

LEFT, DOWN, RIGHT, UP = range(4)


@dataclass(frozen=True)
class FrozenLakeState:
    square: int = 0
    done: bool = False
    steps: int = 0


def move(square: int, action: int) -> int:
    row, col = divmod(square, SIZE)
    if action == LEFT:
        col = max(col - 1, 0)
    elif action == DOWN:
        row = min(row + 1, SIZE - 1)
    elif action == RIGHT:
        col = min(col + 1, SIZE - 1)
    elif action == UP:
        row = max(row - 1, 0)
    else:
        raise ValueError(f"frozen-lake action must be in 0..3, got {action}")
    return row * SIZE + col


def frozenlake_step(state: FrozenLakeState, action: int) -> tuple[FrozenLakeState, float, bool]:
    if state.done:
        raise EpisodeOver("step called on a finished frozen-lake episode")
    square = move(state.square, action)
    steps = state.steps + 1
    if square == GOAL:
        return FrozenLakeState(square, True, steps), 1.0, True
    done = square in HOLES or steps >= MAX_STEPS
    return FrozenLakeState(square, done, steps), 0.0, done
