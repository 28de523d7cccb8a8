"""Multivariate Bayesian structural time series with spike-and-slab
predictor selection.

The public surface: configure a model (``ModelSpec``), elicit priors
(``elicit_priors``), run the Gibbs sampler (``train``), then forecast
(``predict``/``summarize``) or benchmark (``growing_window_eval``).
"""

__version__ = "0.1.0"

from .statespace import (ComponentConfig, ComponentCovariances, ModelSpec,
                         StateSpaceSystem, build_state_space)
from .kalman import (FilterResult, NumericalError, kalman_filter,
                     kalman_smoother, simulation_smoother)
from .regression import (PriorSet, RegressionData, SingularDesignError,
                         elicit_priors)
from .gibbs import (GibbsError, PosteriorDraws, TrainConfig, load_draws,
                    save_draws, train)
from .forecast import ForecastResult, one_step_error, predict, summarize
from .simgen import SyntheticDataset, generate_custom, generate_model
from .bench import EvalConfig, EvalReport, growing_window_eval
from .ingest import (IngestError, PricePanel, load_csv_panel,
                     load_price_panel, max_log_return, read_table)

__all__ = [
    "ComponentConfig", "ComponentCovariances", "ModelSpec",
    "StateSpaceSystem", "build_state_space",
    "FilterResult", "NumericalError", "kalman_filter", "kalman_smoother",
    "simulation_smoother",
    "PriorSet", "RegressionData", "SingularDesignError", "elicit_priors",
    "GibbsError", "PosteriorDraws", "TrainConfig", "load_draws",
    "save_draws", "train",
    "ForecastResult", "one_step_error", "predict", "summarize",
    "SyntheticDataset", "generate_custom", "generate_model",
    "EvalConfig", "EvalReport", "growing_window_eval",
    "IngestError", "PricePanel", "load_csv_panel", "load_price_panel",
    "max_log_return", "read_table",
]
