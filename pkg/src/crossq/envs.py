"""Native episodic environments: 3-action cart-pole and finite-MDP wrapper.

Both expose the same surface: ``obs_dim``, ``n_actions``,
``reset(rng) -> observation`` and ``step(action, rng) -> StepResult``.
Stepping a finished episode raises ProtocolError until the next reset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ProtocolError
from .tabular import FiniteMdp, step_finite_mdp

Array = np.ndarray

# Cart-pole physics (the de-facto standard benchmark constants).
GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
HALF_POLE_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * HALF_POLE_LENGTH
FORCE_MAG = 10.0
TIME_STEP = 0.02

X_LIMIT = 2.4
ANGLE_LIMIT = 15.0 * math.pi / 180.0
EPISODE_CAP = 200
RESET_BOUND = 0.05

#: Action index -> force direction. Index 1 applies no force.
FORCE_DIRECTIONS = (-1.0, 0.0, 1.0)


@dataclass
class CartPoleState:
    """Cart position/velocity and pole angle/angular velocity."""

    x: float
    x_dot: float
    theta: float
    theta_dot: float

    def as_observation(self) -> Array:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])

    def is_terminal(self) -> bool:
        return abs(self.x) > X_LIMIT or abs(self.theta) > ANGLE_LIMIT


@dataclass
class StepResult:
    """Outcome of a single environment step."""

    observation: Array
    reward: float
    done: bool
    step_index: int


def cartpole_dynamics(state: CartPoleState, action: int) -> CartPoleState:
    """One explicit-Euler step of the cart-pole equations of motion."""
    force = FORCE_MAG * FORCE_DIRECTIONS[action]
    cos_t = math.cos(state.theta)
    sin_t = math.sin(state.theta)
    temp = (force + POLE_MASS_LENGTH * state.theta_dot**2 * sin_t) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        HALF_POLE_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t**2 / TOTAL_MASS)
    )
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS
    return CartPoleState(
        x=state.x + TIME_STEP * state.x_dot,
        x_dot=state.x_dot + TIME_STEP * x_acc,
        theta=state.theta + TIME_STEP * state.theta_dot,
        theta_dot=state.theta_dot + TIME_STEP * theta_acc,
    )


class CartPoleEnv:
    """Pole balancing on a frictionless track, three discrete actions.

    Forces are push-left, no-op, push-right. Reward is +1 per step; an
    episode ends when the cart leaves the track, the pole tilts past the
    angle limit, or the step cap is reached.
    """

    obs_dim = 4
    n_actions = 3

    def __init__(self, max_steps: int = EPISODE_CAP):
        self.max_steps = int(max_steps)
        self.state: CartPoleState | None = None
        self._steps = 0
        self._done = True

    def reset(self, rng: np.random.Generator) -> Array:
        vals = rng.uniform(-RESET_BOUND, RESET_BOUND, size=4)
        self.state = CartPoleState(*vals)
        self._steps = 0
        self._done = False
        return self.state.as_observation()

    def step(self, action: int, rng: np.random.Generator | None = None) -> StepResult:
        if self._done or self.state is None:
            raise ProtocolError("episode is finished; call reset() first")
        if not 0 <= action < self.n_actions:
            raise IndexError(f"action {action} out of range [0, {self.n_actions})")
        self.state = cartpole_dynamics(self.state, action)
        self._steps += 1
        self._done = self.state.is_terminal() or self._steps >= self.max_steps
        return StepResult(
            observation=self.state.as_observation(),
            reward=1.0,
            done=self._done,
            step_index=self._steps,
        )


def one_hot(index: int, size: int) -> Array:
    out = np.zeros(size)
    out[index] = 1.0
    return out


def mdp_env_step(mdp: FiniteMdp, s: int, a: int, rng: np.random.Generator) -> StepResult:
    """Sample one finite-MDP transition as a StepResult.

    The observation is the one-hot encoding of the next state; the step
    index is 0 because this stateless form tracks no episode.
    """
    if mdp.terminal[s]:
        raise ProtocolError(f"state {s} is terminal")
    s2, r, done = step_finite_mdp(mdp, s, a, rng)
    return StepResult(
        observation=one_hot(s2, mdp.n_states), reward=r, done=done, step_index=0
    )


class MdpEnv:
    """Episodic wrapper around a FiniteMdp with one-hot observations."""

    def __init__(self, mdp: FiniteMdp, max_steps: int = EPISODE_CAP):
        self.mdp = mdp
        self.max_steps = int(max_steps)
        self.obs_dim = mdp.n_states
        self.n_actions = mdp.n_actions
        self.state = mdp.start_state
        self._steps = 0
        self._done = True

    def reset(self, rng: np.random.Generator) -> Array:
        self.state = self.mdp.start_state
        self._steps = 0
        self._done = False
        return one_hot(self.state, self.obs_dim)

    def step(self, action: int, rng: np.random.Generator) -> StepResult:
        if self._done:
            raise ProtocolError("episode is finished; call reset() first")
        s2, r, done = step_finite_mdp(self.mdp, self.state, action, rng)
        self.state = s2
        self._steps += 1
        self._done = done or self._steps >= self.max_steps
        return StepResult(
            observation=one_hot(s2, self.obs_dim),
            reward=r,
            done=self._done,
            step_index=self._steps,
        )
