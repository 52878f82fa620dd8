from agency_count.agency.bank import AgentBank, agent_step
from agency_count.agency.losses import (
    DensitySource,
    RegionFeatures,
    agent_background_loss,
    agent_foreground_loss,
    agent_gradients,
)
from agency_count.agency.partition import (
    IntervalPartition,
    allocate,
    allocate_many,
    build_partition,
)
from agency_count.agency.similarity import cosine

__all__ = [
    "AgentBank",
    "DensitySource",
    "IntervalPartition",
    "RegionFeatures",
    "agent_background_loss",
    "agent_foreground_loss",
    "agent_gradients",
    "agent_step",
    "allocate",
    "allocate_many",
    "build_partition",
    "cosine",
]
