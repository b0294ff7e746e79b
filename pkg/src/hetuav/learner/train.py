"""Offline distillation from expert data and online multi-agent adaptation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from hetuav.env import HetUavEnv, Transition
from hetuav.learner.agent import SACAgent, SACConfig
from hetuav.learner.buffer import ReplayBuffer, buffers_for


@dataclass
class EpisodeRecord:
    episode: int
    reward: float  # summed over slots, averaged over agents
    f1: float  # summed over slots
    energy: float  # joules, whole fleet
    collisions: int
    violations: int
    s2dc_iterations: float  # mean per slot


def make_agents(env: HetUavEnv, cfg: SACConfig | None, seed: int) -> list[SACAgent]:
    return [SACAgent(env.obs_dim, env.n_actions, cfg, seed=seed * 1000 + k) for k in range(env.n_agents)]


def dataset_buffers(parts: list[list[Transition]], obs_dim: int, capacity: int | None = None) -> list[ReplayBuffer]:
    out = []
    for k, part in enumerate(parts):
        if not part:
            raise ValueError(f"expert dataset partition of agent {k} is empty")
        buf = ReplayBuffer(max(capacity or 0, len(part)), obs_dim, owner=k)
        for tr in part:
            buf.add_transition(tr)
        out.append(buf)
    return out


def distill(agents: list[SACAgent], datasets: list[ReplayBuffer], n_updates: int,
            batch_size: int | None = None, beta: float | None = None) -> list[dict]:
    """Per update and per agent: one conservative critic step, one actor
    step and soft target updates on a mini-batch of that agent's expert
    data. The temperature is held fixed."""
    if len(datasets) != len(agents):
        raise ValueError("need one dataset partition per agent")
    logs = []
    for _ in range(n_updates):
        for k, (agent, data) in enumerate(zip(agents, datasets)):
            if len(data) == 0:
                raise ValueError(f"expert dataset partition of agent {k} is empty")
            bs = batch_size or agent.cfg.batch_size
            b = beta if beta is not None else agent.cfg.beta
            batch = data.sample(bs, agent.rng, reader=k)
            logs.append(agent.update(batch, beta=b, learn_alpha=False))
    return logs


def run_episode(env: HetUavEnv, agents: list[SACAgent], seed: int, episode: int,
                buffers: list[ReplayBuffer] | None = None, learn: bool = True, greedy: bool = False,
                batch_size: int | None = None) -> EpisodeRecord:
    obs = env.reset(seed, episode)
    total = np.zeros(env.n_agents)
    f1 = energy = 0.0
    collisions = violations = 0
    iters = []
    done = False
    while not done:
        joint = [a.act(o, greedy=greedy) for a, o in zip(agents, obs)]
        trs, info = env.step(joint)
        for tr in trs:
            total[tr.agent] += tr.reward
            if buffers is not None:
                buffers[tr.agent].add_transition(tr)
        f1 += info.f1
        energy += float(info.energy.sum())
        collisions += info.collisions
        violations += int(info.violations.sum())
        iters.append(info.s2dc_iterations)
        if learn and buffers is not None:
            for k, agent in enumerate(agents):
                bs = batch_size or agent.cfg.batch_size
                if len(buffers[k]) >= bs:
                    agent.update(buffers[k].sample(bs, agent.rng, reader=k))
        obs = [np.asarray(tr.next_obs) for tr in trs]
        done = trs[0].done
    return EpisodeRecord(episode, float(total.mean()), f1, energy, collisions, violations, float(np.mean(iters)))


def online_adapt(env: HetUavEnv, agents: list[SACAgent], n_episodes: int, seed: int,
                 shared_buffer: bool = False, buffers: list[ReplayBuffer] | None = None,
                 batch_size: int | None = None,
                 on_episode: Callable[[EpisodeRecord], None] | None = None) -> tuple[list[EpisodeRecord], list]:
    """Sample actions, step the environment, store per-agent transitions
    and update each agent once per slot when its buffer holds a batch."""
    if buffers is None:
        cap = agents[0].cfg.buffer_capacity if agents else 1
        buffers = buffers_for(len(agents), cap, env.obs_dim, shared_buffer)
    records = []
    for ep in range(n_episodes):
        rec = run_episode(env, agents, seed, ep, buffers, learn=True, batch_size=batch_size)
        records.append(rec)
        if on_episode is not None:
            on_episode(rec)
    return records, buffers


def greedy_agreement(agents: list[SACAgent], parts: list[list[Transition]]) -> float:
    """Share of states where the greedy action equals the recorded action."""
    hits = n = 0
    for agent, part in zip(agents, parts):
        if not part:
            continue
        obs = np.array([tr.obs for tr in part], dtype=np.float32)
        act = np.array([tr.action for tr in part])
        hits += int((agent.greedy(obs) == act).sum())
        n += len(part)
    return hits / n if n else 0.0
