"""One discrete soft actor-critic learner with twin critics and a learned
temperature; the critic update optionally carries a conservative penalty."""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from hetuav.learner.losses import (actor_loss, cql_penalty, critic_loss, critic_target, policy_log_probs,
                                   soft_update, temperature_loss)
from hetuav.learner.nets import NetConfig, make_net

CHECKPOINT_VERSION = 1


@dataclass
class SACConfig:
    gamma: float = 0.99
    lr: float = 5e-4
    tau: float = 0.005
    beta: float = 1.0
    target_entropy_scale: float = 0.6
    alpha_init: float = 0.2
    reward_scale: float = 0.01  # per-slot rewards are O(10-100); keeps soft values near the entropy scale
    batch_size: int = 512
    buffer_capacity: int = 100_000
    grad_clip: float = 10.0
    net: NetConfig = field(default_factory=NetConfig)


def _t(x, dtype=torch.float32) -> torch.Tensor:
    return torch.as_tensor(np.asarray(x), dtype=dtype)


class SACAgent:
    def __init__(self, obs_dim: int, n_actions: int, cfg: SACConfig | None = None, seed: int = 0):
        self.cfg = cfg or SACConfig()
        self.obs_dim, self.n_actions = obs_dim, n_actions
        torch.manual_seed(seed)
        self.actor = make_net(obs_dim, n_actions, self.cfg.net)
        self.q1 = make_net(obs_dim, n_actions, self.cfg.net)
        self.q2 = make_net(obs_dim, n_actions, self.cfg.net)
        self.q1_t = copy.deepcopy(self.q1)
        self.q2_t = copy.deepcopy(self.q2)
        for p in list(self.q1_t.parameters()) + list(self.q2_t.parameters()):
            p.requires_grad_(False)
        self.log_alpha = torch.tensor(math.log(self.cfg.alpha_init), requires_grad=True)
        lr = self.cfg.lr
        self.opt_actor = torch.optim.Adam(self.actor.parameters(), lr=lr)
        self.opt_critic = torch.optim.Adam(list(self.q1.parameters()) + list(self.q2.parameters()), lr=lr)
        self.opt_alpha = torch.optim.Adam([self.log_alpha], lr=lr)
        self.target_entropy = self.cfg.target_entropy_scale * math.log(n_actions)
        self.rng = np.random.default_rng(seed)
        self.updates = 0

    @property
    def alpha(self) -> float:
        return float(self.log_alpha.detach().exp())

    def probs(self, obs) -> np.ndarray:
        with torch.no_grad():
            return torch.softmax(self.actor(_t(obs)), -1).double().numpy()

    def act(self, obs, greedy: bool = False) -> int:
        p = self.probs(obs)
        if greedy:
            return int(np.argmax(p))
        return int(self.rng.choice(self.n_actions, p=p / p.sum()))

    def greedy(self, obs_batch) -> np.ndarray:
        with torch.no_grad():
            return self.actor(_t(obs_batch)).argmax(-1).numpy()

    def update(self, batch: dict, beta: float = 0.0, learn_alpha: bool = True) -> dict:
        """One gradient step on critics, actor and (optionally) temperature,
        followed by soft target updates."""
        c = self.cfg
        obs, nxt = _t(batch["obs"]), _t(batch["next_obs"])
        act = _t(batch["action"], torch.int64)
        rew, done = _t(batch["reward"]) * c.reward_scale, _t(batch["done"])
        alpha = self.log_alpha.exp().detach()

        with torch.no_grad():
            nlogp = policy_log_probs(self.actor(nxt))
            y = critic_target(rew, done, nlogp.exp(), nlogp, self.q1_t(nxt), self.q2_t(nxt), alpha, c.gamma)
        q1_row, q2_row = self.q1(obs), self.q2(obs)
        q1_sa = q1_row.gather(-1, act.unsqueeze(-1)).squeeze(-1)
        q2_sa = q2_row.gather(-1, act.unsqueeze(-1)).squeeze(-1)
        loss_q = critic_loss(q1_sa, y) + critic_loss(q2_sa, y)
        cql = torch.zeros(())
        if beta > 0:
            cql = cql_penalty(q1_row, act) + cql_penalty(q2_row, act)
            loss_q = loss_q + beta * cql
        self.opt_critic.zero_grad()
        loss_q.backward()
        torch.nn.utils.clip_grad_norm_(list(self.q1.parameters()) + list(self.q2.parameters()), c.grad_clip)
        self.opt_critic.step()

        logp = policy_log_probs(self.actor(obs))
        probs = logp.exp()
        with torch.no_grad():
            q1o, q2o = self.q1(obs), self.q2(obs)
        loss_pi = actor_loss(probs, logp, q1o, q2o, alpha)
        self.opt_actor.zero_grad()
        loss_pi.backward()
        torch.nn.utils.clip_grad_norm_(self.actor.parameters(), c.grad_clip)
        self.opt_actor.step()

        loss_a = torch.zeros(())
        if learn_alpha:
            loss_a = temperature_loss(self.log_alpha, probs.detach(), logp.detach(), self.target_entropy)
            self.opt_alpha.zero_grad()
            loss_a.backward()
            self.opt_alpha.step()

        soft_update(self.q1_t, self.q1, c.tau)
        soft_update(self.q2_t, self.q2, c.tau)
        self.updates += 1
        return dict(critic=loss_q.item(), cql=cql.item(), actor=loss_pi.item(), alpha=loss_a.item())

    # persistence -------------------------------------------------------------
    def state_dict(self) -> dict:
        return dict(version=CHECKPOINT_VERSION, obs_dim=self.obs_dim, n_actions=self.n_actions,
                    cfg=asdict(self.cfg), actor=self.actor.state_dict(), q1=self.q1.state_dict(),
                    q2=self.q2.state_dict(), q1_t=self.q1_t.state_dict(), q2_t=self.q2_t.state_dict(),
                    log_alpha=self.log_alpha.detach().clone(), opt_actor=self.opt_actor.state_dict(),
                    opt_critic=self.opt_critic.state_dict(), opt_alpha=self.opt_alpha.state_dict(),
                    rng=self.rng.bit_generator.state, updates=self.updates)

    def load_state_dict(self, sd: dict) -> None:
        if sd.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {sd.get('version')}")
        if (sd["obs_dim"], sd["n_actions"]) != (self.obs_dim, self.n_actions):
            raise ValueError("checkpoint shape does not match this agent")
        for name in ("actor", "q1", "q2", "q1_t", "q2_t"):
            getattr(self, name).load_state_dict(sd[name])
        with torch.no_grad():
            self.log_alpha.copy_(sd["log_alpha"])
        for name in ("opt_actor", "opt_critic", "opt_alpha"):
            getattr(self, name).load_state_dict(sd[name])
        self.rng.bit_generator.state = sd["rng"]
        self.updates = sd["updates"]


def save_agents(path: str | Path, agents: list[SACAgent]) -> None:
    torch.save({"version": CHECKPOINT_VERSION, "agents": [a.state_dict() for a in agents]}, path)


def load_agents(path: str | Path, agents: list[SACAgent]) -> list[SACAgent]:
    data = torch.load(path, weights_only=False)
    if data.get("version") != CHECKPOINT_VERSION or len(data["agents"]) != len(agents):
        raise ValueError("checkpoint does not match the agent list")
    for a, sd in zip(agents, data["agents"]):
        a.load_state_dict(sd)
    return agents
