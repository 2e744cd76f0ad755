"""Collision probability estimation and sequential testing.

Estimate C(p) = sum_i p_i^2 of a discrete distribution, test H0: C(p) = c0
sequentially with anytime validity, and do both under local differential
privacy via salted one-bit hashing. A Monte-Carlo harness replays the
statistical guarantees at desk scale and emits CSV.
"""

from .batch import (
    BatchSampleSizeSpec,
    BatchTestResult,
    batch_test,
    plug_in,
    plug_in_sample_size,
    u_statistic,
    u_statistic_sample_size,
)
from .distributions import (
    AbsoluteContinuityError,
    DiscreteDistribution,
    TwoPointPair,
    collision_probability,
    frequency_moment,
    kl_divergence,
    new_exponential,
    new_power_law,
    new_two_point_pair,
    new_uniform,
    parse_distribution_spec,
    random_distribution,
    sample,
    tv_distance,
)
from .harness import ExperimentConfig, RunRecord, recipe, run_experiment, summarize, sweep
from .ldp import (
    HashChannel,
    InfeasiblePrivacyError,
    PrivacyParams,
    audit_privacy,
    privatize,
    required_salts,
)
from .mechanism import (
    EstimateResult,
    InfeasiblePlanError,
    MechanismPlan,
    krappor_indirect_estimate,
    plan_mechanism,
    recommended_n,
    run_mechanism,
)
from .private_sequential import (
    DoublingResult,
    DoublingRound,
    PsqState,
    biased_null,
    psq_threshold,
    round_failure_budget,
    run_doubling,
    run_psq,
)
from .rng import derive_key, derive_seed, make_rng, splitmix64
from .sequential import SeqTestState, Verdict, collision_statistic_trace, run_test, threshold

__version__ = "0.1.0"

__all__ = [
    "AbsoluteContinuityError",
    "BatchSampleSizeSpec",
    "BatchTestResult",
    "DiscreteDistribution",
    "DoublingResult",
    "DoublingRound",
    "EstimateResult",
    "ExperimentConfig",
    "HashChannel",
    "InfeasiblePlanError",
    "InfeasiblePrivacyError",
    "MechanismPlan",
    "PrivacyParams",
    "PsqState",
    "RunRecord",
    "SeqTestState",
    "TwoPointPair",
    "Verdict",
    "audit_privacy",
    "batch_test",
    "biased_null",
    "collision_probability",
    "collision_statistic_trace",
    "derive_key",
    "derive_seed",
    "frequency_moment",
    "kl_divergence",
    "krappor_indirect_estimate",
    "make_rng",
    "new_exponential",
    "new_power_law",
    "new_two_point_pair",
    "new_uniform",
    "parse_distribution_spec",
    "plan_mechanism",
    "plug_in",
    "plug_in_sample_size",
    "privatize",
    "psq_threshold",
    "random_distribution",
    "recipe",
    "recommended_n",
    "required_salts",
    "round_failure_budget",
    "run_doubling",
    "run_experiment",
    "run_mechanism",
    "run_psq",
    "run_test",
    "sample",
    "splitmix64",
    "summarize",
    "sweep",
    "threshold",
    "tv_distance",
    "u_statistic",
    "u_statistic_sample_size",
]
