"""Discrete soft actor-critic and conservative Q-learning losses.

All functions act on plain tensors so they can be checked against scalar
expansions and finite differences.
"""

from __future__ import annotations

import torch


def policy_probs(logits: torch.Tensor) -> torch.Tensor:
    return torch.softmax(logits, dim=-1)


def policy_log_probs(logits: torch.Tensor) -> torch.Tensor:
    return torch.log_softmax(logits, dim=-1)


def policy_entropy(probs: torch.Tensor, log_probs: torch.Tensor | None = None) -> torch.Tensor:
    """-sum pi log pi with 0 log 0 = 0."""
    if log_probs is None:
        log_probs = torch.log(probs.clamp_min(torch.finfo(probs.dtype).tiny))
    return -(probs * torch.where(probs > 0, log_probs, torch.zeros_like(log_probs))).sum(-1)


@torch.no_grad()
def critic_target(reward, done, next_probs, next_log_probs, q1_next, q2_next, alpha, gamma) -> torch.Tensor:
    """y = r + gamma (1 - done) sum_a' pi(a'|s') [min_i Q_i(s', a') - alpha log pi(a'|s')]."""
    v = (next_probs * (torch.minimum(q1_next, q2_next) - alpha * next_log_probs)).sum(-1)
    return reward + gamma * (1.0 - done) * v


def critic_loss(q_sa: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    return ((q_sa - y) ** 2).mean()


def cql_penalty(q_row: torch.Tensor, expert_action: torch.Tensor) -> torch.Tensor:
    """mean over states of logsumexp_a Q(s, a) - Q(s, a_expert)."""
    q_e = q_row.gather(-1, expert_action.long().unsqueeze(-1)).squeeze(-1)
    return (torch.logsumexp(q_row, dim=-1) - q_e).mean()


def actor_loss(probs, log_probs, q1, q2, alpha) -> torch.Tensor:
    """E_s sum_a pi(a|s) [alpha log pi(a|s) - min_i Q_i(s, a)]."""
    return (probs * (alpha * log_probs - torch.minimum(q1, q2))).sum(-1).mean()


def temperature_loss(log_alpha: torch.Tensor, probs: torch.Tensor, log_probs: torch.Tensor,
                     target_entropy: float) -> torch.Tensor:
    """E_s[-alpha (sum_a pi log pi + H_target)]; the policy terms are fixed."""
    neg_h = (probs * log_probs).sum(-1).detach()
    return (-log_alpha.exp() * (neg_h + target_entropy)).mean()


@torch.no_grad()
def soft_update(target: torch.nn.Module, online: torch.nn.Module, tau: float) -> None:
    for pt, po in zip(target.parameters(), online.parameters()):
        pt.mul_(1.0 - tau).add_(po, alpha=tau)
