"""Central finite-difference check of autograd gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np
import torch


def gradient_check(loss_fn: Callable[[], torch.Tensor], params: list[torch.Tensor], h: float = 1e-5,
                   n_samples: int = 20, seed: int = 0) -> float:
    """Max over sampled parameter entries of |analytic - numeric| / (|analytic| + 1e-8).

    ``loss_fn`` must recompute the loss from the current parameter values;
    use float64 parameters for meaningful tolerances.
    """
    for p in params:
        p.grad = None
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    grads = [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]
    rng = np.random.default_rng(seed)
    worst = 0.0
    sizes = np.array([p.numel() for p in params])
    for _ in range(n_samples):
        j = int(rng.choice(len(params), p=sizes / sizes.sum()))
        p = params[j]
        idx = int(rng.integers(p.numel()))
        flat = p.data.view(-1)
        old = flat[idx].item()
        with torch.no_grad():
            flat[idx] = old + h
            up = float(loss_fn())
            flat[idx] = old - h
            down = float(loss_fn())
            flat[idx] = old
        num = (up - down) / (2 * h)
        ana = float(grads[j].reshape(-1)[idx])
        worst = max(worst, abs(ana - num) / (abs(ana) + 1e-8))
    return worst
