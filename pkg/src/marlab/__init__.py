"""Mixed causal-noncausal autoregression toolkit."""

from .cobubble import CoBubbleResult, grid_search
from .detrend import (TrendFit, TrendSpec, detrend, fit_breaks, fit_polynomial,
                      hp_filter, hp_lambda_for_monthly)
from .errors import DataError, EstimationError, MarlabError
from .forecast import (CompanionForm, ForecastConfig, PredictiveDensity,
                       cauchy_density, cauchy_one_step_probs, prob_events,
                       sample_forecast, simulations_forecast)
from .mar import (ErrorDist, FittedMar, MarModel, OrderSelection, estimate,
                  fitted_from_model, identify, pseudo_residual_path,
                  select_pseudo_order, simulate, student_t_logpdf)
from .montecarlo import (Dgp, McConfig, TrendComponent, default_paper_config,
                         run_coefficients, run_identification, run_mse)
from .series import (DeflationIndex, TimeSeries, deflate, empirical_sd,
                     load_csv, reverse)

__version__ = "0.1.0"
