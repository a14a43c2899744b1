"""Q-ensembles and their training rules.

One ensemble object covers every agent variant in the kit: a single
network with a frozen target copy (max-operator or decoupled targets),
and K-network cross training where each update of member i bootstraps
its target value from a randomly chosen peer j != i. Members are either
fully separate networks or K linear heads on a shared rectifier trunk.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .nn import (
    AdamState,
    MlpParams,
    adam_init,
    adam_step,
    mlp_backward,
    mlp_forward,
    mlp_init,
    mlp_value,
)
from .replay import Batch, ReplayBuffer

Array = np.ndarray

ALGO_VANILLA = "vanilla"
ALGO_DOUBLE = "double"
ALGO_CROSS = "cross"

STRATEGY_VOTE = "vote"
STRATEGY_BOOTSTRAP = "bootstrap"
STRATEGY_SINGLE = "single"

ARCH_SEPARATE = "separate"
ARCH_SHARED = "shared"

TRAIN_SINGLE = "single"  # one member per step
TRAIN_ALL = "all"  # every member, each on its own minibatch

DRAW_PER_BATCH = "per_batch"
DRAW_PER_ROW = "per_row"


@dataclass
class EpsilonSchedule:
    """Linear anneal from ``start`` to ``end`` over ``horizon`` steps."""

    start: float = 1.0
    end: float = 0.02
    horizon: int = 10_000


def epsilon_at(sched: EpsilonSchedule, step: int) -> float:
    """Exploration rate at a global step; clamped past the horizon."""
    if step < 0:
        raise ConfigError("step must be >= 0")
    if sched.horizon <= 0 or step >= sched.horizon:
        return sched.end
    return sched.start + (sched.end - sched.start) * (step / sched.horizon)


def dueling_aggregate(value: float, advantages: Array, mode: str = "mean") -> Array:
    """Combine a state value with per-action advantages into Q-values.

    mean mode recenters advantages by their average, max mode by their
    maximum; either makes the value/advantage split identifiable.
    """
    adv = np.asarray(advantages, dtype=np.float64)
    if adv.size == 0:
        raise ShapeError("advantages must be non-empty")
    if mode == "mean":
        baseline = adv.mean()
    elif mode == "max":
        baseline = adv.max()
    else:
        raise ConfigError(f"unknown dueling mode {mode!r}")
    return value + adv - baseline


@dataclass
class AgentConfig:
    """Everything that determines agent behavior, all surfaced in configs."""

    algo: str = ALGO_CROSS
    k: int = 5
    hidden: tuple[int, ...] = (64, 32)
    architecture: str = ARCH_SEPARATE
    action_strategy: str = STRATEGY_VOTE
    train_mode: str = TRAIN_SINGLE
    learner_schedule: str = "uniform"  # or "round_robin"
    evaluator_draw: str = DRAW_PER_BATCH
    gamma: float = 0.99
    batch_size: int = 32
    learning_rate: float = 0.001
    target_sync: int = 0  # 0 disables target copies
    mask_p: float = 1.0  # 1 disables bootstrap masks
    dueling: bool = False
    dueling_mode: str = "mean"

    def validate(self) -> None:
        if self.algo not in (ALGO_VANILLA, ALGO_DOUBLE, ALGO_CROSS):
            raise ConfigError(f"unknown algo {self.algo!r}")
        if self.algo in (ALGO_VANILLA, ALGO_DOUBLE):
            if self.k != 1:
                raise ConfigError(f"{self.algo} uses a single network; set k = 1")
            if self.target_sync < 1:
                raise ConfigError(f"{self.algo} needs a target copy; set target_sync >= 1")
        elif self.k < 2:
            raise ConfigError("cross training needs k >= 2")
        if self.action_strategy not in (STRATEGY_VOTE, STRATEGY_BOOTSTRAP, STRATEGY_SINGLE):
            raise ConfigError(f"unknown action strategy {self.action_strategy!r}")
        if self.architecture not in (ARCH_SEPARATE, ARCH_SHARED):
            raise ConfigError(f"unknown architecture {self.architecture!r}")
        if self.train_mode not in (TRAIN_SINGLE, TRAIN_ALL):
            raise ConfigError(f"unknown train mode {self.train_mode!r}")
        if self.learner_schedule not in ("uniform", "round_robin"):
            raise ConfigError(f"unknown learner schedule {self.learner_schedule!r}")
        if self.evaluator_draw not in (DRAW_PER_BATCH, DRAW_PER_ROW):
            raise ConfigError(f"unknown evaluator draw {self.evaluator_draw!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        if self.batch_size < 1 or self.learning_rate <= 0 or self.target_sync < 0:
            raise ConfigError("batch_size >= 1, learning_rate > 0, target_sync >= 0 required")
        if not 0.0 < self.mask_p <= 1.0:
            raise ConfigError("mask_p must lie in (0, 1]")
        if self.dueling_mode not in ("mean", "max"):
            raise ConfigError(f"unknown dueling mode {self.dueling_mode!r}")
        if any(h < 1 for h in self.hidden):
            raise ConfigError("hidden layer sizes must be >= 1")


class QEnsemble:
    """K parameterized Q-functions with optional frozen target copies.

    Construction consumes the given rng, so a fixed seed reproduces the
    exact parameter initialization. The ensemble owns per-member Adam
    state (plus one trunk state in shared mode) and a train-call counter
    for round-robin learner scheduling.
    """

    def __init__(
        self,
        obs_dim: int,
        n_actions: int,
        config: AgentConfig,
        rng: np.random.Generator,
    ):
        config.validate()
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.config = config
        self.k = config.k
        self.train_calls = 0
        out_dim = n_actions + 1 if config.dueling else n_actions
        if config.architecture == ARCH_SEPARATE:
            sizes = [obs_dim, *config.hidden, out_dim]
            self.members = [mlp_init(sizes, rng) for _ in range(self.k)]
            self.adam = [adam_init(m) for m in self.members]
            self.trunk: list[tuple[Array, Array]] | None = None
            self.heads: list[tuple[Array, Array]] | None = None
        else:
            trunk = mlp_init([obs_dim, *config.hidden], rng)
            self.trunk = trunk.layers
            feat = config.hidden[-1] if config.hidden else obs_dim
            self.heads = [
                mlp_init([feat, out_dim], rng).layers[0] for _ in range(self.k)
            ]
            self.members = None
            self.trunk_adam = adam_init(MlpParams(self.trunk))
            self.head_adam = [adam_init(MlpParams([h])) for h in self.heads]
        self._targets_enabled = config.target_sync > 0
        self._target_members: list[MlpParams] | None = None
        self._target_trunk: list[tuple[Array, Array]] | None = None
        self._target_heads: list[tuple[Array, Array]] | None = None
        if self._targets_enabled:
            self.sync_targets()

    @property
    def has_targets(self) -> bool:
        return self._targets_enabled

    def member_params(self, member: int) -> MlpParams:
        if self.members is not None:
            return self.members[member]
        return MlpParams([*self.trunk, self.heads[member]])

    def target_params(self, member: int) -> MlpParams:
        if not self._targets_enabled:
            return self.member_params(member)
        if self._target_members is not None:
            return self._target_members[member]
        return MlpParams([*self._target_trunk, self._target_heads[member]])

    def sync_targets(self) -> None:
        """Hard-copy current parameters into the frozen target slots."""
        if not self._targets_enabled:
            return
        if self.members is not None:
            self._target_members = [m.copy() for m in self.members]
        else:
            self._target_trunk = [(w.copy(), b.copy()) for w, b in self.trunk]
            self._target_heads = [(w.copy(), b.copy()) for w, b in self.heads]

    def raw_to_q(self, raw: Array) -> Array:
        """Map raw network outputs to Q-values (batched dueling combine)."""
        if not self.config.dueling:
            return raw
        value = raw[:, :1]
        adv = raw[:, 1:]
        if self.config.dueling_mode == "mean":
            return value + adv - adv.mean(axis=1, keepdims=True)
        return value + adv - adv.max(axis=1, keepdims=True)

    def q_grad_to_raw(self, raw: Array, dq: Array) -> Array:
        """Pull a Q-space gradient back through the dueling combination."""
        if not self.config.dueling:
            return dq
        total = dq.sum(axis=1, keepdims=True)
        draw = np.empty_like(raw)
        draw[:, :1] = total
        if self.config.dueling_mode == "mean":
            draw[:, 1:] = dq - total / self.n_actions
        else:
            adv = raw[:, 1:]
            draw[:, 1:] = dq
            best = adv.argmax(axis=1)
            draw[np.arange(len(raw)), 1 + best] -= total[:, 0]
        return draw

    def q_batch(self, member: int, states: Array, use_target: bool = False) -> Array:
        params = self.target_params(member) if use_target else self.member_params(member)
        raw, _ = mlp_forward(params, states)
        return self.raw_to_q(raw)

    def q_single(self, member: int, state: Array) -> Array:
        raw = mlp_value(self.member_params(member), state)
        if not self.config.dueling:
            return raw
        return dueling_aggregate(raw[0], raw[1:], self.config.dueling_mode)

    def apply_gradients(self, member: int, grads: list[tuple[Array, Array]], lr: float) -> None:
        """Adam-update one member; shared-trunk gradients are scaled 1/K."""
        if self.members is not None:
            self.members[member], self.adam[member] = adam_step(
                self.members[member], grads, self.adam[member], lr
            )
            return
        n_trunk = len(self.trunk)
        trunk_grads = [(gw / self.k, gb / self.k) for gw, gb in grads[:n_trunk]]
        new_trunk, self.trunk_adam = adam_step(
            MlpParams(self.trunk), trunk_grads, self.trunk_adam, lr
        )
        self.trunk = new_trunk.layers
        new_head, self.head_adam[member] = adam_step(
            MlpParams([self.heads[member]]), grads[n_trunk:], self.head_adam[member], lr
        )
        self.heads[member] = new_head.layers[0]


def select_action(
    ensemble: QEnsemble,
    state: Array,
    strategy: str,
    epsilon: float,
    rng: np.random.Generator,
    episode_head: int = 0,
) -> int:
    """Pick an action: uniform with probability epsilon, else greedy under
    the chosen ensemble strategy.

    vote: majority over member argmaxes; vote ties go to the candidate
    with the largest Q summed across members, then the lowest index.
    bootstrap: argmax of the head fixed for this episode.
    single: argmax of member 0.
    """
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(ensemble.n_actions))
    if strategy == STRATEGY_SINGLE:
        return int(np.argmax(ensemble.q_single(0, state)))
    if strategy == STRATEGY_BOOTSTRAP:
        return int(np.argmax(ensemble.q_single(episode_head, state)))
    if strategy == STRATEGY_VOTE:
        qs = np.stack([ensemble.q_single(m, state) for m in range(ensemble.k)])
        votes = np.bincount(qs.argmax(axis=1), minlength=ensemble.n_actions)
        candidates = np.flatnonzero(votes == votes.max())
        if len(candidates) == 1:
            return int(candidates[0])
        summed = qs.sum(axis=0)
        return int(candidates[np.argmax(summed[candidates])])
    raise ConfigError(f"unknown action strategy {strategy!r}")


def td_targets(
    ensemble: QEnsemble,
    batch: Batch,
    algo: str,
    gamma: float,
    rng: np.random.Generator,
    learner: int = 0,
    evaluator_draw: str = DRAW_PER_BATCH,
) -> Array:
    """One-step TD targets for a minibatch; terminal rows get the reward.

    vanilla: target copy picks and values the next action.
    double:  online net picks, target copy values.
    cross:   the learner picks, a random peer values. The peer's frozen
    copy is used when target copies are enabled, a live peer otherwise.
    """
    y = batch.rewards.astype(np.float64).copy()
    live = ~batch.dones
    if not live.any():
        return y
    rows = np.arange(len(batch))
    s2 = batch.next_states
    if algo == ALGO_VANILLA:
        tq = ensemble.q_batch(0, s2, use_target=True)
        boot = tq.max(axis=1)
    elif algo == ALGO_DOUBLE:
        a2 = ensemble.q_batch(0, s2).argmax(axis=1)
        boot = ensemble.q_batch(0, s2, use_target=True)[rows, a2]
    elif algo == ALGO_CROSS:
        if ensemble.k < 2:
            raise ConfigError("cross targets need k >= 2")
        a2 = ensemble.q_batch(learner, s2).argmax(axis=1)
        if evaluator_draw == DRAW_PER_BATCH:
            j = int(rng.integers(ensemble.k - 1))
            j += j >= learner
            boot = ensemble.q_batch(j, s2, use_target=ensemble.has_targets)[rows, a2]
        else:
            js = rng.integers(0, ensemble.k - 1, size=len(batch))
            js = js + (js >= learner)
            boot = np.empty(len(batch))
            for j in np.unique(js):
                sel = js == j
                qj = ensemble.q_batch(int(j), s2[sel], use_target=ensemble.has_targets)
                boot[sel] = qj[np.arange(sel.sum()), a2[sel]]
    else:
        raise ConfigError(f"unknown algo {algo!r}")
    y[live] += gamma * boot[live]
    return y


def train_member_on_batch(
    ensemble: QEnsemble,
    member: int,
    batch: Batch,
    targets: Array,
    row_weights: Array,
    lr: float,
) -> float:
    """Gradient-step one member toward fixed targets on the taken actions.

    The loss is the row-weighted mean squared TD error; only the taken
    action's output receives gradient. Returns the pre-update loss.
    """
    params = ensemble.member_params(member)
    raw, cache = mlp_forward(params, batch.states)
    q = ensemble.raw_to_q(raw)
    rows = np.arange(len(batch))
    resid = q[rows, batch.actions] - targets
    weighted = row_weights * resid
    loss = float(np.mean(weighted * resid))
    dq = np.zeros_like(q)
    dq[rows, batch.actions] = (2.0 / len(batch)) * weighted
    grads = mlp_backward(params, cache, ensemble.q_grad_to_raw(raw, dq))
    ensemble.apply_gradients(member, grads, lr)
    return loss


def batch_td_loss(
    ensemble: QEnsemble, member: int, batch: Batch, targets: Array, row_weights: Array
) -> float:
    """Row-weighted mean squared TD error without updating anything."""
    q = ensemble.q_batch(member, batch.states)
    rows = np.arange(len(batch))
    resid = q[rows, batch.actions] - targets
    return float(np.mean(row_weights * resid * resid))


def train_step(
    ensemble: QEnsemble,
    buf: ReplayBuffer,
    config: AgentConfig,
    rng: np.random.Generator,
    global_step: int,
) -> float | None:
    """One training step: pick learner(s), sample, regress toward TD targets.

    No-op (returns None) until the buffer holds a full batch. Target
    copies are refreshed whenever ``global_step`` hits the sync period.
    """
    loss = None
    if len(buf) >= config.batch_size:
        if config.train_mode == TRAIN_ALL:
            learners = range(ensemble.k)
        elif config.learner_schedule == "round_robin":
            learners = (ensemble.train_calls % ensemble.k,)
        else:
            learners = (int(rng.integers(ensemble.k)),)
        losses = []
        for member in learners:
            batch, masks = buf.sample(config.batch_size, rng, config.mask_p, ensemble.k)
            targets = td_targets(
                ensemble,
                batch,
                config.algo,
                config.gamma,
                rng,
                learner=member,
                evaluator_draw=config.evaluator_draw,
            )
            losses.append(
                train_member_on_batch(
                    ensemble, member, batch, targets, masks[member], config.learning_rate
                )
            )
        ensemble.train_calls += 1
        loss = float(np.mean(losses))
    if config.target_sync > 0 and global_step % config.target_sync == 0:
        ensemble.sync_targets()
    return loss
