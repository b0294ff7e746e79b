"""Policy and critic networks over flat relative-position observations."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class NetConfig:
    hidden: tuple = (256, 256, 128)
    encoder: str = "mlp"  # "mlp" or "attention"
    d_model: int = 64
    n_heads: int = 4
    n_blocks: int = 3


class MLP(nn.Module):
    def __init__(self, n_in: int, n_out: int, hidden=(256, 256, 128)):
        super().__init__()
        layers, d = [], n_in
        for h in hidden:
            layers += [nn.Linear(d, h), nn.ReLU()]
            d = h
        layers.append(nn.Linear(d, n_out))
        self.body = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.body(x)


class AttentionNet(nn.Module):
    """Each 2D relative position becomes a token; a small Transformer encoder
    is mean-pooled into a linear head."""

    def __init__(self, n_in: int, n_out: int, d_model: int = 64, n_heads: int = 4, n_blocks: int = 3):
        super().__init__()
        if n_in % 2:
            raise ValueError("observation length must be even (2D relative positions)")
        self.embed = nn.Linear(2, d_model)
        self.slot = nn.Parameter(torch.zeros(n_in // 2, d_model))
        layer = nn.TransformerEncoderLayer(d_model, n_heads, dim_feedforward=2 * d_model, dropout=0.0,
                                           batch_first=True)
        self.encoder = nn.TransformerEncoder(layer, n_blocks, enable_nested_tensor=False)
        self.head = nn.Linear(d_model, n_out)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        tokens = self.embed(x.reshape(*x.shape[:-1], -1, 2)) + self.slot
        return self.head(self.encoder(tokens).mean(dim=-2))


def make_net(n_in: int, n_out: int, cfg: NetConfig | None = None) -> nn.Module:
    cfg = cfg or NetConfig()
    if cfg.encoder == "mlp":
        return MLP(n_in, n_out, cfg.hidden)
    if cfg.encoder == "attention":
        return AttentionNet(n_in, n_out, cfg.d_model, cfg.n_heads, cfg.n_blocks)
    raise ValueError(f"unknown encoder {cfg.encoder!r}")
