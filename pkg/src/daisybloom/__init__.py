"""Weighted Bloom filters with per-element hash counts chosen from insert and query distributions."""

from .analysis import (
    BatchSummary,
    BoundAudit,
    TrialReport,
    concentration_check,
    encoding_lengths,
    exact_weighted_fpr,
    rho_check,
    run_audit,
    run_batch,
    run_trial,
    theorem5_bound,
)
from .distributions import (
    SampledSet,
    WeightedUniverse,
    assumption_holds,
    entropy_bits,
    from_table,
    load_weights,
    sample_set,
    uniform,
    zipf,
)
from .filter import DaisyFilter, build, positions
from .planner import (
    FilterPlan,
    PartitionClass,
    classify,
    k_int,
    k_real,
    lb_bits,
    plan_daisy,
    plan_ratio_only,
    plan_report,
    plan_standard,
)

__all__ = [
    "BatchSummary", "BoundAudit", "DaisyFilter", "FilterPlan", "PartitionClass", "SampledSet",
    "TrialReport", "WeightedUniverse", "assumption_holds", "build", "classify",
    "concentration_check", "encoding_lengths", "entropy_bits", "exact_weighted_fpr",
    "from_table", "k_int", "k_real", "lb_bits", "load_weights", "plan_daisy",
    "plan_ratio_only", "plan_report", "plan_standard", "positions", "rho_check", "run_audit",
    "run_batch", "run_trial", "sample_set", "theorem5_bound", "uniform", "zipf",
]
