"""Experience tuples and a fixed-capacity FIFO replay store."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ShapeError

Array = np.ndarray

DEFAULT_CAPACITY = 50_000


@dataclass
class Transition:
    """One observed step. States are float vectors for deep agents and
    plain integer indices for tabular learners."""

    state: Array | int
    action: int
    reward: float
    next_state: Array | int
    done: bool


@dataclass
class Batch:
    """Column-wise minibatch of transitions."""

    states: Array
    actions: Array
    rewards: Array
    next_states: Array
    dones: Array

    def __len__(self) -> int:
        return len(self.actions)


class ReplayBuffer:
    """FIFO ring of transitions with uniform with-replacement sampling."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY, obs_dim: int = 4):
        if capacity < 1 or obs_dim < 1:
            raise ShapeError("capacity and obs_dim must be positive")
        self.capacity = int(capacity)
        self.obs_dim = int(obs_dim)
        self._states = np.empty((capacity, obs_dim))
        self._actions = np.empty(capacity, dtype=np.int64)
        self._rewards = np.empty(capacity)
        self._next_states = np.empty((capacity, obs_dim))
        self._dones = np.empty(capacity, dtype=bool)
        self._size = 0
        self._cursor = 0

    def __len__(self) -> int:
        return self._size

    def push(self, t: Transition) -> None:
        """Append one transition, evicting the oldest when full."""
        state = np.asarray(t.state, dtype=np.float64)
        next_state = np.asarray(t.next_state, dtype=np.float64)
        if state.shape != (self.obs_dim,) or next_state.shape != (self.obs_dim,):
            raise ShapeError(
                f"state vectors must have shape ({self.obs_dim},), "
                f"got {state.shape} and {next_state.shape}"
            )
        i = self._cursor
        self._states[i] = state
        self._actions[i] = t.action
        self._rewards[i] = t.reward
        self._next_states[i] = next_state
        self._dones[i] = t.done
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(
        self,
        n: int,
        rng: np.random.Generator,
        mask_p: float = 1.0,
        members: int = 1,
    ) -> tuple[Batch, Array]:
        """Uniform sample of n rows plus per-member bootstrap masks.

        Masks are i.i.d. Bernoulli(mask_p) of shape (members, n);
        mask_p = 1 disables masking (all ones).
        """
        if self._size < n:
            raise InsufficientDataError(f"buffer holds {self._size} < {n} transitions")
        idx = rng.integers(0, self._size, size=n)
        batch = self.gather(idx)
        if mask_p >= 1.0:
            masks = np.ones((members, n))
        else:
            masks = (rng.random((members, n)) < mask_p).astype(np.float64)
        return batch, masks

    def gather(self, idx: Array) -> Batch:
        """Materialize the rows at the given storage indices."""
        return Batch(
            states=self._states[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_states=self._next_states[idx],
            dones=self._dones[idx],
        )

    def all_rows(self) -> Batch:
        """Copy of every stored transition (order not meaningful once the
        ring has wrapped)."""
        return self.gather(np.arange(self._size))

    def sample_state_actions(self, n: int, rng: np.random.Generator) -> tuple[Array, Array]:
        """min(n, size) stored (state, action) pairs without replacement."""
        if self._size == 0:
            raise InsufficientDataError("buffer is empty")
        take = min(n, self._size)
        idx = rng.choice(self._size, size=take, replace=False)
        return self._states[idx], self._actions[idx]
