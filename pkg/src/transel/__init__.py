"""Model selection for transfer learning under hierarchies of hypothesis classes.

The package simulates a learner that sees labeled samples from a source
distribution and a (typically much smaller) labeled sample from the target
distribution, and must pick both a hypothesis-class level and a hypothesis.
It ships exact-risk benchmark instances, the selection algorithms, and a
seeded experiment harness with a CLI front-end.
"""

from .analysis import (
    BccCheck,
    RateProfile,
    TransferExponentEstimate,
    default_ratio_grid,
    estimate_transfer_exponent,
    excess_risk,
    extended_gap_witness_grid,
    global_optimal_risk,
    level_risk_minimizer,
    profile_rows,
    profile_table,
    rate_profile,
    verify_bcc,
)
from .classifiers import (
    BoundaryHypothesis,
    CpwlFunction,
    ReluParams,
    TabularHypothesis,
    canonical_from_labels,
    cpwl_to_relu_params,
    enumerate_hypotheses,
    evaluate,
    to_cpwl,
    vc_dimension,
)
from .distributions import (
    Bernoulli,
    Deterministic,
    DiscreteDistribution,
    LabeledSample,
    PiecewiseDistribution,
    PowerLaw,
    Segment,
    Uniform,
    distribution_from_json,
    distribution_to_json,
)
from .erm import (
    BoundaryClassHierarchy,
    ErmResult,
    FiniteClassHierarchy,
    OneSidedThresholdHierarchy,
    SearchResult,
    empirical_disagreement,
    empirical_risk,
    erm_bruteforce,
    hypothesis_sort_key,
    mistake_count,
)
from .families import (
    LevelTruth,
    TransferInstance,
    build_extended_gap_family,
    build_fixed_class_family,
    build_gap_family,
    build_shifted_target,
    build_threshold_nn,
    build_two_point_family,
    event_b_probability,
)
from .harness import (
    EXPERIMENT_KINDS,
    ExperimentConfig,
    RunRecord,
    build_family,
    calibrate,
    erm_check,
    gap_demo,
    records_csv_text,
    run_experiment,
    run_replicates,
    stable_seed,
    summary_json_text,
    verify_construction,
    write_outputs,
)
from .selection import (
    SelectionConfig,
    SelectionTrace,
    algorithm1,
    algorithm2,
    intersection_representative,
    lepski_min_level,
    level_confidence,
    oracle_learner,
    target_only_srm,
)

__all__ = [
    "BccCheck",
    "Bernoulli",
    "BoundaryClassHierarchy",
    "BoundaryHypothesis",
    "CpwlFunction",
    "Deterministic",
    "DiscreteDistribution",
    "EXPERIMENT_KINDS",
    "ErmResult",
    "ExperimentConfig",
    "FiniteClassHierarchy",
    "LabeledSample",
    "LevelTruth",
    "OneSidedThresholdHierarchy",
    "PiecewiseDistribution",
    "PowerLaw",
    "RateProfile",
    "ReluParams",
    "RunRecord",
    "SearchResult",
    "Segment",
    "SelectionConfig",
    "SelectionTrace",
    "TabularHypothesis",
    "TransferExponentEstimate",
    "TransferInstance",
    "Uniform",
    "algorithm1",
    "algorithm2",
    "build_extended_gap_family",
    "build_family",
    "build_fixed_class_family",
    "build_gap_family",
    "build_shifted_target",
    "build_threshold_nn",
    "build_two_point_family",
    "calibrate",
    "canonical_from_labels",
    "cpwl_to_relu_params",
    "default_ratio_grid",
    "distribution_from_json",
    "distribution_to_json",
    "empirical_disagreement",
    "empirical_risk",
    "enumerate_hypotheses",
    "erm_bruteforce",
    "erm_check",
    "estimate_transfer_exponent",
    "evaluate",
    "event_b_probability",
    "excess_risk",
    "extended_gap_witness_grid",
    "gap_demo",
    "global_optimal_risk",
    "hypothesis_sort_key",
    "intersection_representative",
    "lepski_min_level",
    "level_confidence",
    "level_risk_minimizer",
    "mistake_count",
    "oracle_learner",
    "profile_rows",
    "profile_table",
    "rate_profile",
    "records_csv_text",
    "run_experiment",
    "run_replicates",
    "stable_seed",
    "summary_json_text",
    "target_only_srm",
    "to_cpwl",
    "vc_dimension",
    "verify_bcc",
    "verify_construction",
    "write_outputs",
]
