"""Adversarial and reconstruction objectives.

The discriminator maximizes log D(x,y) + log(1 - D(x, G(x))); the generator
uses the non-saturating form -log D(x, G(x)) plus an L1 reconstruction term
weighted by lambda. Probabilities are clamped at eps = 1e-7 before the logs.
"""

from __future__ import annotations

import torch

EPS = 1e-7


def loss(d_real: torch.Tensor, d_fake: torch.Tensor, y: torch.Tensor,
         g_out: torch.Tensor, lam: float) -> tuple[torch.Tensor, torch.Tensor]:
    """Returns (generator loss, discriminator loss).

    The L1 term is the per-pixel mean absolute difference, matching the
    evaluation metric. Works on any broadcastable tensor shapes and preserves
    the input dtype; scalars for the probabilities give the textbook
    arithmetic.
    """
    d_real = torch.clamp(torch.as_tensor(d_real), EPS, 1.0 - EPS)
    d_fake = torch.clamp(torch.as_tensor(d_fake), EPS, 1.0 - EPS)
    disc = -(torch.log(d_real) + torch.log(1.0 - d_fake)).mean()
    l1 = torch.abs(torch.as_tensor(y) - torch.as_tensor(g_out)).mean()
    gen = -torch.log(d_fake).mean() + lam * l1
    return gen, disc


def l1_term(y: torch.Tensor, g_out: torch.Tensor) -> torch.Tensor:
    return torch.abs(y - g_out).mean()
