from agency_count.losses.bayes import (
    PosteriorMatrix,
    nd_bayes_loss,
    plain_bayes_loss,
    posterior_matrix,
)
from agency_count.losses.compose import compose_losses, mask_loss

__all__ = [
    "PosteriorMatrix",
    "compose_losses",
    "mask_loss",
    "nd_bayes_loss",
    "plain_bayes_loss",
    "posterior_matrix",
]
