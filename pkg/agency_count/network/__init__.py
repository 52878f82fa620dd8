from agency_count.network.backbone import FeatureBackbone, ToyBackbone, get_backbone
from agency_count.network.model import (
    CountingModel,
    ForwardOutputs,
    build_model,
    predict_counts,
    predict_density,
)
from agency_count.network.split import attach_density_source, split_features
from agency_count.network.transformer import ForegroundTransformer

__all__ = [
    "CountingModel",
    "FeatureBackbone",
    "ForegroundTransformer",
    "ForwardOutputs",
    "ToyBackbone",
    "attach_density_source",
    "build_model",
    "get_backbone",
    "predict_counts",
    "predict_density",
    "split_features",
]
