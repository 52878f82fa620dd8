from agency_count.contrastive.gradients import (
    batch_contrastive_agent_gradient,
    contrastive_agent_gradient,
)
from agency_count.contrastive.loss import (
    batch_contrastive_loss,
    contrastive_loss,
    total_agency_loss,
    weighted_info_nce,
)
from agency_count.contrastive.matching import (
    match_weights,
    matching_probability,
    positive_mask,
    positive_set,
    uncertainty_weight,
)

__all__ = [
    "batch_contrastive_agent_gradient",
    "batch_contrastive_loss",
    "contrastive_agent_gradient",
    "contrastive_loss",
    "match_weights",
    "matching_probability",
    "positive_mask",
    "positive_set",
    "total_agency_loss",
    "uncertainty_weight",
    "weighted_info_nce",
]
