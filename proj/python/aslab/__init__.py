"""Tree-search agent evaluation: ideation diversity, metrics, simulation."""

from ._aslab import (  # noqa: F401
    AslabError,
    MedalThresholds,
    ReportRow,
    award_medal,
    controlled_experiment,
    default_scenario_json,
    distinct_arch_cdf,
    elo_expected_win,
    elo_ratings,
    extract_labels,
    medal_thresholds,
    normalized_score,
    pearson_correlation,
    percentile,
    shannon_entropy,
    stratified_bootstrap_ci,
    synthetic_task_ids,
    __version__,
)
