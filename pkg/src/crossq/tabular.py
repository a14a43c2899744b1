"""Finite-MDP ground truth: value iteration and tabular learners.

Value iteration supplies the optimal table that the Q-learning,
double Q-learning, and cross Q-learning traces are measured against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .replay import Transition

Array = np.ndarray

NOISE_NONE = "none"
NOISE_UNIFORM = "uniform"
NOISE_TWO_POINT = "two_point"


@dataclass
class FiniteMdp:
    """Explicit small MDP: transition tensor, mean rewards, reward noise.

    ``transitions[s, a]`` is a probability vector over next states.
    ``noise_scale`` is the full width of the reward perturbation: uniform
    noise adds U(-w/2, +w/2), two-point noise adds +-w/2 with equal
    probability. Terminal states must self-loop with zero reward.
    """

    transitions: Array
    rewards: Array
    terminal: Array
    discount: float
    noise_kind: str = NOISE_NONE
    noise_scale: float | Array = 0.0
    start_state: int = 0

    def __post_init__(self) -> None:
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.terminal = np.asarray(self.terminal, dtype=bool)
        self.noise_scale = np.broadcast_to(
            np.asarray(self.noise_scale, dtype=np.float64), self.rewards.shape
        )
        self.validate()
        # per-(s,a) CDF over successors, for fast inverse-transform sampling
        self._cdf = np.cumsum(self.transitions, axis=2)

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    def validate(self) -> None:
        n_s, n_a, n_s2 = self.transitions.shape
        if n_s != n_s2 or self.rewards.shape != (n_s, n_a) or self.terminal.shape != (n_s,):
            raise ConfigError("transition/reward/terminal shapes disagree")
        if not 0.0 <= self.discount < 1.0:
            raise ConfigError(f"discount must lie in [0, 1), got {self.discount}")
        row_sums = self.transitions.sum(axis=2)
        if np.abs(row_sums - 1.0).max() > 1e-12 or (self.transitions < 0).any():
            raise ConfigError("each transitions[s, a] must be a probability vector")
        if self.noise_kind not in (NOISE_NONE, NOISE_UNIFORM, NOISE_TWO_POINT):
            raise ConfigError(f"unknown noise kind {self.noise_kind!r}")
        for s in np.flatnonzero(self.terminal):
            if not np.allclose(self.transitions[s, :, s], 1.0):
                raise ConfigError(f"terminal state {s} must self-loop")
            if np.any(self.rewards[s] != 0.0):
                raise ConfigError(f"terminal state {s} must have zero reward")
        if not 0 <= self.start_state < n_s or self.terminal[self.start_state]:
            raise ConfigError("start_state must be a valid non-terminal state")


@dataclass
class LearningSchedule:
    """Stepsize and exploration rules for tabular runs.

    The stepsize for the n-th visit of a state-action pair is
    ``n ** -alpha_exponent``; exponents in (0.5, 1] satisfy the
    Robbins-Monro summability conditions.
    """

    alpha_exponent: float = 0.8
    epsilon: float = 0.1

    def __post_init__(self) -> None:
        if not 0.5 < self.alpha_exponent <= 1.0:
            raise ConfigError("alpha_exponent must lie in (0.5, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")

    def alpha(self, visit_count: int) -> float:
        return float(visit_count) ** -self.alpha_exponent


def value_iteration(mdp: FiniteMdp, tol: float) -> Array:
    """Fixed point of the one-step optimality backup, per-action values.

    Iterates Q <- R + gamma * T @ max_a' Q until the max-norm residual of
    one more backup falls below ``tol``.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    q = np.zeros((mdp.n_states, mdp.n_actions))
    while True:
        backup = mdp.rewards + mdp.discount * mdp.transitions @ q.max(axis=1)
        if np.abs(backup - q).max() < tol:
            return backup
        q = backup


def step_finite_mdp(
    mdp: FiniteMdp, s: int, a: int, rng: np.random.Generator
) -> tuple[int, float, bool]:
    """Sample one environment transition: (next state, reward, done)."""
    n_s, n_a = mdp.n_states, mdp.n_actions
    if not (0 <= s < n_s and 0 <= a < n_a):
        raise IndexError(f"state {s} or action {a} out of range ({n_s} states, {n_a} actions)")
    s2 = int(np.searchsorted(mdp._cdf[s, a], rng.random(), side="right"))
    s2 = min(s2, n_s - 1)  # guard against cdf rounding a hair below 1
    r = float(mdp.rewards[s, a])
    if mdp.noise_kind == NOISE_UNIFORM:
        r += float(mdp.noise_scale[s, a]) * (rng.random() - 0.5)
    elif mdp.noise_kind == NOISE_TWO_POINT:
        r += 0.5 * float(mdp.noise_scale[s, a]) * (1.0 if rng.random() < 0.5 else -1.0)
    return s2, r, bool(mdp.terminal[s2])


def q_step(table: Array, t: Transition, alpha: float, gamma: float) -> Array:
    """Standard one-table update toward r + gamma * max_a' Q(s', a').

    Mutates ``table`` in place and returns it. A terminal next state
    contributes nothing beyond the reward.
    """
    s, a, s2 = int(t.state), int(t.action), int(t.next_state)
    target = t.reward if t.done else t.reward + gamma * table[s2].max()
    table[s, a] += alpha * (target - table[s, a])
    return table


def double_q_step(
    table_a: Array,
    table_b: Array,
    t: Transition,
    alpha: float,
    gamma: float,
    rng: np.random.Generator,
) -> tuple[Array, Array]:
    """Coin-flip which table updates; it selects the next action by its own
    argmax and reads the value from the other table."""
    if rng.integers(2) == 0:
        _decoupled_update(table_a, table_b, t, alpha, gamma)
    else:
        _decoupled_update(table_b, table_a, t, alpha, gamma)
    return table_a, table_b


def cross_q_step(
    tables: list[Array], i: int, j: int, t: Transition, alpha: float, gamma: float
) -> list[Array]:
    """Table i updates; it picks a' by its own argmax and evaluates a' with
    table j. Only table i changes."""
    if i == j:
        raise ConfigError("learner and evaluator tables must differ")
    if len(tables) < 2:
        raise ConfigError("cross updates need at least two tables")
    _decoupled_update(tables[i], tables[j], t, alpha, gamma)
    return tables


def _decoupled_update(
    learner: Array, evaluator: Array, t: Transition, alpha: float, gamma: float
) -> None:
    s, a, s2 = int(t.state), int(t.action), int(t.next_state)
    if t.done:
        target = t.reward
    else:
        a2 = int(np.argmax(learner[s2]))
        target = t.reward + gamma * evaluator[s2, a2]
    learner[s, a] += alpha * (target - learner[s, a])


def _check_algo_k(algo: str, k: int) -> None:
    expected = {"q": k == 1, "double": k == 2, "cross": k >= 2}
    if algo not in expected:
        raise ConfigError(f"unknown algo {algo!r}")
    if not expected[algo]:
        raise ConfigError(f"algo {algo!r} is inconsistent with K={k}")


def run_tabular(
    mdp: FiniteMdp,
    algo: str,
    k: int,
    steps: int,
    schedule: LearningSchedule,
    seed: int,
    trace_points: int = 200,
) -> list[tuple[int, float]]:
    """Run a tabular learner and trace its distance to the optimal table.

    Behavior is epsilon-greedy on the mean of the K tables; stepsizes decay
    with per-(s,a) visit counts. Returns (step, max-norm error of the mean
    table vs value iteration) pairs, ending exactly at ``steps``.
    """
    _check_algo_k(algo, k)
    q_star = value_iteration(mdp, 1e-10)
    rng = np.random.default_rng(seed)
    n_s, n_a = mdp.n_states, mdp.n_actions
    tables = [np.zeros((n_s, n_a)) for _ in range(k)]
    visits = np.zeros((n_s, n_a), dtype=np.int64)
    trace: list[tuple[int, float]] = []
    every = max(1, steps // max(1, trace_points))
    s = mdp.start_state
    for step in range(1, steps + 1):
        mean_row = tables[0][s] if k == 1 else sum(tb[s] for tb in tables)
        if rng.random() < schedule.epsilon:
            a = int(rng.integers(n_a))
        else:
            a = int(np.argmax(mean_row))
        s2, r, done = step_finite_mdp(mdp, s, a, rng)
        visits[s, a] += 1
        alpha = schedule.alpha(int(visits[s, a]))
        t = Transition(s, a, r, s2, done)
        if algo == "q":
            q_step(tables[0], t, alpha, mdp.discount)
        elif algo == "double":
            double_q_step(tables[0], tables[1], t, alpha, mdp.discount, rng)
        else:
            i = int(rng.integers(k))
            j = int(rng.integers(k - 1))
            j += j >= i
            cross_q_step(tables, i, j, t, alpha, mdp.discount)
        if step % every == 0 or step == steps:
            mean_table = tables[0] if k == 1 else sum(tables) / k
            trace.append((step, float(np.abs(mean_table - q_star).max())))
        s = mdp.start_state if done else s2
    return trace


def one_state_mdp(reward: float = 1.0, discount: float = 0.5) -> FiniteMdp:
    """Single non-terminal self-loop; optimal value is reward/(1-discount)."""
    return FiniteMdp(
        transitions=np.ones((1, 1, 1)),
        rewards=np.full((1, 1), reward),
        terminal=np.array([False]),
        discount=discount,
    )


def chain_mdp(discount: float = 0.9) -> FiniteMdp:
    """Two live states feeding an absorbing end state.

    s0 steps to s1 for reward 0; s1 steps to the absorbing state for
    reward 1. Optimal values: Q(s0) = discount, Q(s1) = 1.
    """
    transitions = np.zeros((3, 1, 3))
    transitions[0, 0, 1] = 1.0
    transitions[1, 0, 2] = 1.0
    transitions[2, 0, 2] = 1.0
    rewards = np.array([[0.0], [1.0], [0.0]])
    return FiniteMdp(
        transitions=transitions,
        rewards=rewards,
        terminal=np.array([False, False, True]),
        discount=discount,
    )


def noisy_bench_mdp(
    n_states: int = 6,
    n_actions: int = 3,
    discount: float = 0.95,
    noise_width: float = 2.0,
    seed: int = 21,
) -> FiniteMdp:
    """The stochastic benchmark: an episodic random MDP whose reward noise
    dwarfs the action gaps.

    Half the states are live, the rest absorbing. Every (state, action)
    sends 50-65% of its mass to the absorbing states and spreads the rest
    over the other live states near-evenly, so episodes stay short and
    every pair keeps collecting visits under epsilon-greedy behavior.
    The start state's actions are nearly tied (the regime where the max
    operator's bias is largest); the other live states carry action gaps
    (0.22-0.32 in mean reward) well clear of the learning noise. The
    per-step reward noise dwarfs every gap. Fixed seed, so the MDP itself
    is a constant of the test suite.
    """
    rng = np.random.default_rng(seed)
    n_live = n_states // 2
    transitions = np.zeros((n_states, n_actions, n_states))
    for s in range(n_live):
        others = [x for x in range(n_live) if x != s]
        for a in range(n_actions):
            p_term = rng.uniform(0.5, 0.65)
            tilt = rng.dirichlet(np.full(len(others), 1.0))
            mix = 0.7 / len(others) + 0.3 * tilt
            transitions[s, a, others] = (1.0 - p_term) * mix
            transitions[s, a, n_live:] = p_term / (n_states - n_live)
    for s in range(n_live, n_states):
        transitions[s, :, s] = 1.0
    rewards = np.zeros((n_states, n_actions))
    for s in range(n_live):
        gap = 0.01 if s == 0 else rng.uniform(0.22, 0.32)
        offsets = gap * np.linspace(-1.0, 1.0, n_actions)
        rng.shuffle(offsets)
        rewards[s] = rng.uniform(-0.1, 0.1) + offsets
    terminal = np.arange(n_states) >= n_live
    return FiniteMdp(
        transitions=transitions,
        rewards=rewards,
        terminal=terminal,
        discount=discount,
        noise_kind=NOISE_UNIFORM,
        noise_scale=noise_width,
    )


#: Named MDPs addressable from configs and the CLI.
BUILTIN_MDPS = {
    "one_state": one_state_mdp,
    "chain": chain_mdp,
    "noisy6": noisy_bench_mdp,
}
