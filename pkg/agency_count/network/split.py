# agency_count/network/split.py
from __future__ import annotations

import torch

from agency_count.agency.losses import DensitySource, RegionFeatures
from agency_count.agency.partition import IntervalPartition, allocate_many
from agency_count.datasets.prepared import PreparedScene
from agency_count.network.model import ForwardOutputs


def split_features(
    features: torch.Tensor,
    mask: torch.Tensor,
    densities: torch.Tensor | None = None,
    source: DensitySource = DensitySource.PREDICTED,
) -> RegionFeatures:
    """
    Foreground rows are the cells where ``mask`` is 1, background the rest.

    The mask is only a selector: it is detached, so no gradient reaches it,
    while gradients flow into ``features`` through both groups. ``densities``
    is a full ``(h, w)`` grid; the foreground picks its cells.
    """
    channels = features.shape[0]
    tokens = features.reshape(channels, -1).T
    selected = mask.detach().reshape(-1) >= 0.5
    fg_cells = torch.nonzero(selected).flatten()
    bg_cells = torch.nonzero(~selected).flatten()

    if densities is None:
        fg_density = tokens.new_zeros((fg_cells.shape[0],))
    else:
        fg_density = densities.reshape(-1)[fg_cells]

    return RegionFeatures(
        foreground=tokens[fg_cells],
        densities=fg_density,
        background=tokens[bg_cells],
        sources=(source,) * int(fg_cells.shape[0]),
        foreground_cells=fg_cells,
        background_cells=bg_cells,
    )


def attach_density_source(
    scene: PreparedScene,
    outputs: ForwardOutputs,
    partition: IntervalPartition,
    density_floor: float = 1e-3,
) -> RegionFeatures:
    """
    Labeled scenes split on the GT mask with GT cell counts; unlabeled scenes
    split on the predicted mask with the detached predicted density. Densities
    are floored at ``density_floor`` so every foreground cell is allocatable.
    """
    features = outputs.features
    if scene.is_labeled:
        mask = torch.from_numpy(scene.mask.values).to(features.device)
        density = torch.from_numpy(scene.density.values).to(features.device, features.dtype)
        source = DensitySource.GT
    else:
        mask = outputs.mask
        density = outputs.density.detach()
        source = DensitySource.PREDICTED

    region = split_features(features, mask, density.clamp(min=density_floor), source)
    region.agent_index = allocate_many(region.densities, partition)
    return region
