"""Simulation benchmark: designs, contamination, baselines and the Monte Carlo driver."""
from .baselines import AdaptiveLSLasso, LSLasso, lasso_path, oracle_ls, oracle_mm, oracle_tml
from .contamination import DEFAULT_Y0_GRID, ContaminationSpec, contaminate
from .metrics import Metrics, fnr, fpr, metrics
from .runner import ESTIMATORS, ScenarioReport, default_jobs, replication_stream, run_monte_carlo
from .scenarios import (SCENARIO_IDS, Dataset, ErrorLaw, ScenarioConfig, ar_covariance,
                        draw_carriers, generate_scenario, scenario_config)

__all__ = [
    "AdaptiveLSLasso", "LSLasso", "lasso_path", "oracle_ls", "oracle_mm", "oracle_tml",
    "DEFAULT_Y0_GRID", "ContaminationSpec", "contaminate",
    "Metrics", "fnr", "fpr", "metrics",
    "ESTIMATORS", "ScenarioReport", "default_jobs", "replication_stream", "run_monte_carlo",
    "SCENARIO_IDS", "Dataset", "ErrorLaw", "ScenarioConfig", "ar_covariance",
    "draw_carriers", "generate_scenario", "scenario_config",
]
