# agency_count/network/model.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from agency_count.core.config import ModelConfig
from agency_count.core.errors import NonFiniteError
from agency_count.datasets.models import SceneSample
from agency_count.datasets.prepared import image_tensor
from agency_count.network.backbone import get_backbone
from agency_count.network.heads import DensityEstimator, ForegroundPredictor, binarize
from agency_count.network.transformer import ForegroundTransformer

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ForwardOutputs:
    """
    ``features`` is ``(B, c, h, w)``; ``mask_prob``, ``mask`` and ``density``
    are ``(B, h, w)``. Indexing drops the batch dimension.
    """

    features: torch.Tensor
    mask_prob: torch.Tensor
    mask: torch.Tensor
    density: torch.Tensor

    def __getitem__(self, index: int) -> "ForwardOutputs":
        return ForwardOutputs(
            features=self.features[index],
            mask_prob=self.mask_prob[index],
            mask=self.mask[index],
            density=self.density[index],
        )

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def counts(self) -> torch.Tensor:
        return self.density.flatten(-2).sum(-1)


def _check_finite(tensor: torch.Tensor, layer: str) -> torch.Tensor:
    if not bool(torch.isfinite(tensor).all()):
        raise NonFiniteError(f"non-finite activations after {layer}", details={"layer": layer})
    return tensor


class RegressionHead(nn.Module):
    """Foreground predictor, foreground transformer and density estimator."""

    def __init__(self, config: ModelConfig, zero_init_transformer: bool = False):
        super().__init__()
        self.predictor = ForegroundPredictor(config.channels)
        self.transformer = ForegroundTransformer(
            config.channels,
            config.attn_heads,
            config.attn_layers,
            config.head_hidden,
            zero_init=zero_init_transformer,
        )
        self.estimator = DensityEstimator(config.channels, config.head_hidden)

    def forward(self, features: torch.Tensor):
        mask_prob = _check_finite(self.predictor(features), "foreground_predictor")
        mask = binarize(mask_prob)

        refined_maps = []
        for feature_map, cell_mask in zip(features, mask):
            channels, height, width = feature_map.shape
            tokens = feature_map.flatten(1).T
            selected = cell_mask.flatten().bool()
            fg_index = torch.nonzero(selected).flatten()
            refined = self.transformer(tokens[selected], tokens[~selected])
            tokens = tokens.index_put((fg_index,), refined)
            refined_maps.append(tokens.T.reshape(channels, height, width))
        recombined = _check_finite(torch.stack(refined_maps), "foreground_transformer")

        density = _check_finite(self.estimator(recombined), "density_estimator")
        return mask_prob, mask, density


class CountingModel(nn.Module):
    def __init__(
        self,
        config: ModelConfig,
        backbone: Optional[nn.Module] = None,
        zero_init_transformer: bool = False,
    ):
        super().__init__()
        self.config = config
        self.stride = config.stride
        self.backbone = get_backbone(config, backbone)
        self.head = RegressionHead(config, zero_init_transformer)

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        if images.ndim == 3:
            images = images.unsqueeze(0)
        height, width = images.shape[-2:]
        pad_h = (-height) % self.stride
        pad_w = (-width) % self.stride
        if pad_h or pad_w:
            images = F.pad(images, (0, pad_w, 0, pad_h))
        return _check_finite(self.backbone(images), "backbone")

    def forward(self, images: torch.Tensor, *, head_grad: bool = True) -> ForwardOutputs:
        """
        With ``head_grad=False`` the head runs on detached features without
        building a graph, so no loss can reach its parameters.
        """
        features = self.encode(images)
        if head_grad:
            mask_prob, mask, density = self.head(features)
        else:
            with torch.no_grad():
                mask_prob, mask, density = self.head(features.detach())
        return ForwardOutputs(features, mask_prob, mask, density)

    def head_parameters(self):
        return self.head.parameters()

    def backbone_parameters(self):
        return self.backbone.parameters()


def build_model(config: ModelConfig, backbone: Optional[nn.Module] = None) -> CountingModel:
    """Seeded construction: equal configs give equal initial parameters."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        return CountingModel(config, backbone)


@torch.no_grad()
def predict_density(model: CountingModel, sample: SceneSample) -> np.ndarray:
    was_training = model.training
    model.eval()
    try:
        density = model(image_tensor(sample.image)).density[0]
    finally:
        model.train(was_training)
    return density.cpu().numpy()


def predict_counts(model: CountingModel, samples: Sequence[SceneSample]) -> list[float]:
    return [float(predict_density(model, sample).sum()) for sample in samples]
