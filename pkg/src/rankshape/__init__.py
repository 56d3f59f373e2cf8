"""Numerical toolkit for effective-rank trajectory analysis: spectral
metrics, rank-aware reward shaping, orthogonal probe selection, evaluation
statistics, and a desk-scale rank-collapse simulator."""

from .errors import (
    ConfigError,
    DegenerateDataError,
    DegenerateLabelsError,
    DegenerateSpectrumError,
    FileFormatError,
    GroupSizeError,
    InputError,
    NormalizationError,
    RangeError,
    RankshapeError,
    SeparableDataError,
    TrajectoryTooShortError,
    ZeroVarianceError,
)
from .evalstats import (
    DecouplingSample,
    LogitFit,
    PassCounts,
    fit_decoupling_logit,
    load_decoupling_csv,
    mean_token_entropy,
    pass_at_k,
    pass_curve,
)
from .io import (
    RunConfig,
    apply_overrides,
    load_run_config,
    parse_run_config,
    read_trajectory,
    read_trajectory_with_metadata,
    write_trajectory,
)
from .probes import (
    ProbeChoice,
    ProbeSet,
    StitchPlan,
    lookahead_manifold,
    orthogonality_score,
    plan_stitch,
    select_probe,
)
from .rewards import (
    GroupSample,
    RolloutOutcome,
    group_advantages,
    grpo_objective,
    score_group,
    total_reward,
)
from .sim import (
    EnvSpec,
    PolicyParams,
    Rollout,
    SimTrace,
    SweepResult,
    biased_init,
    build_env,
    geometric_barrier_probe,
    policy_gradient,
    rollout,
    temperature_sweep,
    train,
    weighted_log_prob,
)
from .spectral import (
    ManifoldBasis,
    Spectrum,
    center,
    confinement_ratio,
    covariance_spectrum,
    effective_rank,
    principal_subspace,
    spectral_entropy,
    validate_trajectory,
)
from .windows import WindowRankProfile, norm_rank, window_starts, windowed_min_effrank

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DecouplingSample",
    "DegenerateDataError",
    "DegenerateLabelsError",
    "DegenerateSpectrumError",
    "EnvSpec",
    "FileFormatError",
    "GroupSample",
    "GroupSizeError",
    "InputError",
    "LogitFit",
    "ManifoldBasis",
    "NormalizationError",
    "PassCounts",
    "PolicyParams",
    "ProbeChoice",
    "ProbeSet",
    "RangeError",
    "RankshapeError",
    "Rollout",
    "RolloutOutcome",
    "RunConfig",
    "SeparableDataError",
    "SimTrace",
    "Spectrum",
    "StitchPlan",
    "SweepResult",
    "TrajectoryTooShortError",
    "WindowRankProfile",
    "ZeroVarianceError",
    "apply_overrides",
    "biased_init",
    "build_env",
    "center",
    "confinement_ratio",
    "covariance_spectrum",
    "effective_rank",
    "fit_decoupling_logit",
    "geometric_barrier_probe",
    "group_advantages",
    "grpo_objective",
    "load_decoupling_csv",
    "load_run_config",
    "lookahead_manifold",
    "mean_token_entropy",
    "norm_rank",
    "orthogonality_score",
    "parse_run_config",
    "pass_at_k",
    "pass_curve",
    "plan_stitch",
    "policy_gradient",
    "principal_subspace",
    "read_trajectory",
    "read_trajectory_with_metadata",
    "rollout",
    "score_group",
    "select_probe",
    "spectral_entropy",
    "temperature_sweep",
    "total_reward",
    "train",
    "validate_trajectory",
    "weighted_log_prob",
    "window_starts",
    "windowed_min_effrank",
    "write_trajectory",
]
