"""Delegation-game simulator with a second-best utility guarantee mechanism."""

__version__ = "0.1.0"

from .model import (
    AssumptionReport,
    AssumptionViolation,
    Benchmarks,
    ConfigError,
    CostPerformanceView,
    GameConfig,
    ModelVariant,
    OutcomeSample,
    ProviderProfile,
    SampleBank,
    benchmarks,
    check_assumptions,
    expected_stats,
    sample_outcome,
)
from .config import load_config, load_samples
from .strategies import (
    Action,
    Observation,
    Phase,
    SecondBestPlan,
    StrategyKind,
    decide,
    infeasible_fallback,
    parse_strategy,
    second_best_plan,
)
from .mechanism import (
    BudgetError,
    ExplorationStats,
    MechanismParams,
    QueryRecord,
    Transcript,
    WinnerSelection,
    compute_T_R,
    derive_params,
    run_blind_trust,
    run_exploitation,
    run_exploration,
    run_mechanism,
    select_winner,
)
from .accounting import UtilityReport, provider_utility, report, user_utility
from .harness import (
    SweepSpec,
    run_conditional_sweep,
    run_permutation_sweep,
    run_t_sweep,
)
from .oracle import (
    DominanceReport,
    StrategyGrid,
    best_response_search,
    validated_failure_rate,
)

__all__ = [
    "Action",
    "AssumptionReport",
    "AssumptionViolation",
    "Benchmarks",
    "BudgetError",
    "ConfigError",
    "CostPerformanceView",
    "DominanceReport",
    "ExplorationStats",
    "GameConfig",
    "MechanismParams",
    "ModelVariant",
    "Observation",
    "OutcomeSample",
    "Phase",
    "ProviderProfile",
    "QueryRecord",
    "SampleBank",
    "SecondBestPlan",
    "StrategyGrid",
    "StrategyKind",
    "SweepSpec",
    "Transcript",
    "UtilityReport",
    "WinnerSelection",
    "benchmarks",
    "best_response_search",
    "check_assumptions",
    "compute_T_R",
    "decide",
    "derive_params",
    "expected_stats",
    "infeasible_fallback",
    "load_config",
    "load_samples",
    "parse_strategy",
    "provider_utility",
    "report",
    "run_blind_trust",
    "run_conditional_sweep",
    "run_exploitation",
    "run_exploration",
    "run_mechanism",
    "run_permutation_sweep",
    "run_t_sweep",
    "sample_outcome",
    "second_best_plan",
    "select_winner",
    "user_utility",
    "validated_failure_rate",
]
