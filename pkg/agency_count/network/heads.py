# agency_count/network/heads.py
from __future__ import annotations

import torch
from torch import nn

MASK_THRESHOLD = 0.5


class ForegroundPredictor(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.logits = nn.Conv2d(channels, 1, kernel_size=1)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        """Foreground probabilities ``(B, h, w)``."""
        return torch.sigmoid(self.logits(features)).squeeze(1)


def binarize(mask_prob: torch.Tensor) -> torch.Tensor:
    return (mask_prob.detach() >= MASK_THRESHOLD).to(mask_prob.dtype)


class DensityEstimator(nn.Module):
    """Cell densities from the recombined feature map; ``abs`` keeps ``D >= 0``."""

    def __init__(self, channels: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(channels, hidden, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(hidden, 1, kernel_size=1),
        )

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.net(features).abs().squeeze(1)
