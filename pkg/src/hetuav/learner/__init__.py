"""Independent discrete soft actor-critic learners with conservative distillation."""

from hetuav.learner.agent import SACAgent, SACConfig, load_agents, save_agents
from hetuav.learner.buffer import BufferIsolationError, ReplayBuffer, buffers_for
from hetuav.learner.gradcheck import gradient_check
from hetuav.learner.losses import (actor_loss, cql_penalty, critic_loss, critic_target, policy_entropy,
                                   policy_log_probs, policy_probs, soft_update, temperature_loss)
from hetuav.learner.nets import NetConfig, make_net
from hetuav.learner.train import (EpisodeRecord, dataset_buffers, distill, greedy_agreement, make_agents,
                                  online_adapt, run_episode)

__all__ = [
    "BufferIsolationError", "EpisodeRecord", "NetConfig", "ReplayBuffer", "SACAgent", "SACConfig",
    "actor_loss", "buffers_for", "cql_penalty", "critic_loss", "critic_target", "dataset_buffers", "distill",
    "gradient_check", "greedy_agreement", "load_agents", "make_agents", "make_net", "online_adapt",
    "policy_entropy", "policy_log_probs", "policy_probs", "run_episode", "save_agents", "soft_update",
    "temperature_loss",
]
