from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Experience:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray | None = None
    terminal: bool = False


@dataclass
class Batch:
    states: np.ndarray  # (B, D)
    actions: np.ndarray  # (B,)
    rewards: np.ndarray  # (B,)
    next_states: np.ndarray  # (B, D), rows undefined where has_next is False
    has_next: np.ndarray  # (B,) bool
    terminal: np.ndarray  # (B,) bool

    def __len__(self):
        return len(self.actions)

    @classmethod
    def from_experiences(cls, exps: list[Experience]) -> "Batch":
        dim = len(exps[0].state)
        nxt = np.zeros((len(exps), dim))
        has = np.zeros(len(exps), dtype=bool)
        for i, e in enumerate(exps):
            if e.next_state is not None:
                nxt[i] = e.next_state
                has[i] = True
        return cls(states=np.array([e.state for e in exps], dtype=float),
                   actions=np.array([e.action for e in exps], dtype=int),
                   rewards=np.array([e.reward for e in exps], dtype=float),
                   next_states=nxt, has_next=has,
                   terminal=np.array([e.terminal for e in exps], dtype=bool))


class ReplayMemory:
    """Bounded first-in first-out experience store backed by preallocated arrays."""

    def __init__(self, capacity: int, state_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.state_dim = int(state_dim)
        self._states = np.zeros((self.capacity, self.state_dim))
        self._next = np.zeros((self.capacity, self.state_dim))
        self._actions = np.zeros(self.capacity, dtype=int)
        self._rewards = np.zeros(self.capacity)
        self._has_next = np.zeros(self.capacity, dtype=bool)
        self._terminal = np.zeros(self.capacity, dtype=bool)
        self._head = 0  # next write position
        self._size = 0

    def __len__(self):
        return self._size

    def push(self, exp: Experience) -> None:
        nxt = None if exp.next_state is None else np.asarray(exp.next_state)[None]
        self.push_many(np.asarray(exp.state)[None], [exp.action], [exp.reward], nxt, [exp.terminal])

    def push_many(self, states, actions, rewards, next_states=None, terminal=None) -> None:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        n = len(states)
        if states.shape[1] != self.state_dim:
            raise ValueError("state length does not match replay memory")
        actions = np.broadcast_to(np.asarray(actions, dtype=int), (n,))
        rewards = np.broadcast_to(np.asarray(rewards, dtype=float), (n,))
        terminal = np.zeros(n, dtype=bool) if terminal is None else np.broadcast_to(np.asarray(terminal, dtype=bool), (n,))
        if n > self.capacity:
            states, actions, rewards, terminal = states[-self.capacity:], actions[-self.capacity:], \
                rewards[-self.capacity:], terminal[-self.capacity:]
            if next_states is not None:
                next_states = np.asarray(next_states)[-self.capacity:]
            n = self.capacity
        pos = (self._head + np.arange(n)) % self.capacity
        self._states[pos] = states
        self._actions[pos] = actions
        self._rewards[pos] = rewards
        self._terminal[pos] = terminal
        if next_states is None:
            self._has_next[pos] = False
        else:
            self._next[pos] = next_states
            self._has_next[pos] = True
        self._head = (self._head + n) % self.capacity
        self._size = min(self._size + n, self.capacity)

    def _order(self) -> np.ndarray:
        start = (self._head - self._size) % self.capacity
        return (start + np.arange(self._size)) % self.capacity

    def _gather(self, pos) -> Batch:
        return Batch(states=self._states[pos].copy(), actions=self._actions[pos].copy(),
                     rewards=self._rewards[pos].copy(), next_states=self._next[pos].copy(),
                     has_next=self._has_next[pos].copy(), terminal=self._terminal[pos].copy())

    def __iter__(self):
        for p in self._order():
            yield Experience(state=self._states[p].copy(), action=int(self._actions[p]),
                             reward=float(self._rewards[p]),
                             next_state=self._next[p].copy() if self._has_next[p] else None,
                             terminal=bool(self._terminal[p]))

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform sample without replacement."""
        if batch_size > self._size:
            raise ValueError(f"cannot sample {batch_size} from {self._size} records")
        picks = rng.choice(self._size, size=batch_size, replace=False)
        return self._gather(self._order()[picks])
