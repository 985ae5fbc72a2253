"""Cart-pole balancing dynamics (classic-control constants, Euler integration)."""
from __future__ import annotations

from dataclasses import dataclass, replace
from math import cos, radians, sin

import numpy as np

GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
HALF_LENGTH = 0.5
POLEMASS_LENGTH = POLE_MASS * HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
X_LIMIT = 2.4
THETA_LIMIT = radians(12)
MAX_STEPS = 500


class EpisodeOver(RuntimeError):
    pass


@dataclass(frozen=True)
class CartPoleState:
    x: float = 0.0
    x_dot: float = 0.0
    theta: float = 0.0
    theta_dot: float = 0.0
    steps: int = 0

    @property
    def observation(self) -> tuple[float, float, float, float]:
        return (self.x, self.x_dot, self.theta, self.theta_dot)

    @property
    def done(self) -> bool:
        return abs(self.x) > X_LIMIT or abs(self.theta) > THETA_LIMIT or self.steps >= MAX_STEPS


def cartpole_reset(rng: np.random.Generator) -> CartPoleState:
    x, x_dot, theta, theta_dot = rng.uniform(-0.05, 0.05, size=4)
    return CartPoleState(float(x), float(x_dot), float(theta), float(theta_dot))


def accelerations(theta, theta_dot, force):
    """Cart and pole accelerations; works elementwise on numpy arrays too."""
    sin_t = np.sin(theta)
    cos_t = np.cos(theta)
    temp = (force + POLEMASS_LENGTH * theta_dot**2 * sin_t) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t**2 / TOTAL_MASS)
    )
    x_acc = temp - POLEMASS_LENGTH * theta_acc * cos_t / TOTAL_MASS
    return x_acc, theta_acc


def cartpole_step(state: CartPoleState, action: int) -> tuple[CartPoleState, float, bool]:
    """Advance one tick. Action 1 pushes right, 0 pushes left."""
    if state.done:
        raise EpisodeOver("step called on a finished cart-pole episode")
    if action not in (0, 1):
        raise ValueError(f"cart-pole action must be 0 or 1, got {action}")
    force = FORCE_MAG if action == 1 else -FORCE_MAG
    x_acc, theta_acc = accelerations(state.theta, state.theta_dot, force)
    new = replace(
        state,
        x=state.x + TAU * state.x_dot,
        x_dot=state.x_dot + TAU * float(x_acc),
        theta=state.theta + TAU * state.theta_dot,
        theta_dot=state.theta_dot + TAU * float(theta_acc),
        steps=state.steps + 1,
    )
    return new, 1.0, new.done
