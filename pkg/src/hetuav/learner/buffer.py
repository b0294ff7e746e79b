"""Fixed-capacity replay buffers with read instrumentation.

Every ``sample`` call names its reader, so tests can assert that in the
independent-learner setting no agent ever reads another agent's buffer.
"""

from __future__ import annotations

from collections import Counter

import numpy as np


class BufferIsolationError(RuntimeError):
    pass


class ReplayBuffer:
    """Ring buffer of (obs, action, reward, next_obs, done).

    ``owner`` is the agent id allowed to read it, or None for a buffer shared
    by all agents.
    """

    def __init__(self, capacity: int, obs_dim: int, owner: int | None = None):
        self.capacity = int(capacity)
        self.owner = owner
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.next_obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.action = np.zeros(capacity, dtype=np.int64)
        self.reward = np.zeros(capacity, dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.size = 0
        self.ptr = 0
        self.reads: Counter = Counter()

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action, reward, next_obs, done) -> None:
        i = self.ptr
        self.obs[i] = obs
        self.action[i] = action
        self.reward[i] = reward
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def add_transition(self, tr) -> None:
        self.add(tr.obs, tr.action, tr.reward, tr.next_obs, tr.done)

    def sample(self, n: int, rng: np.random.Generator, reader: int) -> dict:
        if self.owner is not None and reader != self.owner:
            raise BufferIsolationError(f"agent {reader} tried to read agent {self.owner}'s buffer")
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        self.reads[reader] += 1
        idx = rng.integers(0, self.size, size=n)
        return dict(obs=self.obs[idx], action=self.action[idx], reward=self.reward[idx],
                    next_obs=self.next_obs[idx], done=self.done[idx])

    def state_dict(self) -> dict:
        return dict(obs=self.obs[: self.size].copy(), next_obs=self.next_obs[: self.size].copy(),
                    action=self.action[: self.size].copy(), reward=self.reward[: self.size].copy(),
                    done=self.done[: self.size].copy(), ptr=self.ptr, owner=self.owner, capacity=self.capacity)


def buffers_for(n_agents: int, capacity: int, obs_dim: int, shared: bool) -> list[ReplayBuffer]:
    """One buffer per agent, or a single shared buffer referenced by all."""
    if shared:
        buf = ReplayBuffer(capacity, obs_dim, owner=None)
        return [buf] * n_agents
    return [ReplayBuffer(capacity, obs_dim, owner=k) for k in range(n_agents)]
