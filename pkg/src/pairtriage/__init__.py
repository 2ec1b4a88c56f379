"""Human/machine workload splitting for pair resolution with quality guarantees."""

from .model import (
    HUMAN,
    MACHINE,
    MATCH,
    UNMATCH,
    ContractViolation,
    DegeneratePartitionWarning,
    InstancePair,
    LabelAssignment,
    Partition,
    QualityRequirement,
    Solution,
    Workload,
    observed_proportion,
    precision,
    precision_lower_bound,
    recall,
    recall_lower_bound,
)

__all__ = [
    "HUMAN",
    "MACHINE",
    "MATCH",
    "UNMATCH",
    "ContractViolation",
    "DegeneratePartitionWarning",
    "InstancePair",
    "LabelAssignment",
    "Partition",
    "QualityRequirement",
    "Solution",
    "Workload",
    "observed_proportion",
    "precision",
    "precision_lower_bound",
    "recall",
    "recall_lower_bound",
]
