# agency_count/network/backbone.py
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Optional

import torch
from torch import nn

from agency_count.core.config import ModelConfig


class FeatureBackbone(nn.Module, ABC):
    """Maps ``(B, C, H, W)`` images to ``(B, channels, H/stride, W/stride)`` features."""

    name: str = "base"
    stride: int
    channels: int

    @abstractmethod
    def forward(self, images: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError


class ToyBackbone(FeatureBackbone):
    """
    Four 3x3 conv blocks with max-pool downsampling on the first log2(stride)
    blocks, then a linear 1x1 projection. No normalization layers, so the
    output does not depend on batch composition.
    """

    name = "toy_cnn"

    def __init__(self, in_channels: int, channels: int, stride: int):
        super().__init__()
        self.stride = stride
        self.channels = channels
        downsamples = int(math.log2(stride))
        widths = [in_channels, channels // 2, channels, channels, channels]

        blocks = []
        for index in range(4):
            layers: list[nn.Module] = [
                nn.Conv2d(widths[index], widths[index + 1], kernel_size=3, padding=1),
                nn.ReLU(inplace=True),
            ]
            if index < downsamples:
                layers.append(nn.MaxPool2d(2))
            blocks.append(nn.Sequential(*layers))
        self.blocks = nn.Sequential(*blocks)
        self.project = nn.Conv2d(channels, channels, kernel_size=1)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.project(self.blocks(images))


def get_backbone(config: ModelConfig, module: Optional[nn.Module] = None) -> nn.Module:
    """
    ``toy_cnn`` builds the desk-scale network; ``pluggable`` wraps a caller
    supplied module, which must expose ``stride`` and ``channels`` matching
    the config.
    """
    if config.backbone == "toy_cnn":
        return ToyBackbone(config.in_channels, config.channels, config.stride)

    if config.backbone == "pluggable":
        if module is None:
            raise ValueError("a backbone module is required for the pluggable backbone")
        if getattr(module, "stride", None) != config.stride:
            raise ValueError(f"backbone stride must be {config.stride}")
        if getattr(module, "channels", None) != config.channels:
            raise ValueError(f"backbone channels must be {config.channels}")
        return module

    raise ValueError(f"Unknown backbone: {config.backbone}")
