"""Stopping rules for practical boundary claims, with classical comparators and study harness."""

from .benchmarks import (
    CusumConfig,
    NormalCusumModel,
    PoissonCusumModel,
    SprtConfig,
    calibrate_cusum_threshold,
    cusum_normal_run,
    cusum_poisson_run,
    sprt_bernoulli_run,
    sprt_poisson_run,
)
from .errors import (
    CalibrationError,
    ConfigError,
    DomainError,
    MissingSeriesError,
    NumericError,
    SeriesParseError,
)
from .harness import StudyConfig, SummaryRow, emit_table, load_table, run_study
from .ingest import (
    MonitorConfig,
    MonitorTrace,
    SeriesRecord,
    gen_bll_series,
    gen_ili_series,
    load_series_csv,
    monitor_series,
)
from .logistic import LogisticDesign, detect_separation, fit_ridge_logistic, predictive_width
from .scorecard import (
    RuleReports,
    ScorecardConfig,
    ScoreTrace,
    StepScore,
    StopReport,
    evaluate_rules,
    region_scorecard,
)
from .studies import build_study
from .targets import (
    bernoulli_jeffreys_mean,
    exact_reverse_defect,
    gaussian_posterior_mean,
    poisson_jeffreys_mean,
    running_mean,
)
from .uncertainty import (
    all_failure_threshold,
    clopper_pearson_upper_zero,
    gaussian_width,
    jeffreys_beta_width,
    jeffreys_gamma_width,
)

__version__ = "0.1.0"
