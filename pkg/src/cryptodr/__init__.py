"""Feature engineering, PCA/CCA and OLS forecasting for a two-asset daily OHLCV panel."""
from .errors import AnalysisError, ConfigError, DataError, NumericError, StageError
from .pipeline import EvalReport, ExperimentConfig, run_experiment
from .report import emit_report

__all__ = [
    "AnalysisError",
    "ConfigError",
    "DataError",
    "EvalReport",
    "ExperimentConfig",
    "NumericError",
    "StageError",
    "emit_report",
    "run_experiment",
]
__version__ = "0.1.0"
