"""Accuracy-parity-gap fairness estimation from incomplete data.

Estimate a prediction model's group fairness on the full population from the
complete cases of a dataset with missing values, via inverse-propensity
weighting, and compute finite-sample upper/lower bounds on the estimation
error under MCAR/MAR/MNAR missingness.
"""

from .bounds import (BoundInputs, BoundReport, c_d, estimate_tv, evaluate_bounds,
                     lower_bound, upper_bound)
from .dataset import (CsvSchema, Dataset, SyntheticSpec, dataset_all_observed,
                      generate_synthetic, load_csv, split)
from .errors import (DataError, DimensionError, EmptyGroupError, FairgapError,
                     SchemaError, ValidationError)
from .fairness import (FairnessReport, GroupRisk, apg_estimate, apg_true, bias,
                       estimate_apg, weighted_risk)
from .missingness import (CompleteCases, LogitTerm, MissingnessSpec, PropensityOracle,
                          complete_cases, inject, stable_sigmoid)
from .predictors import ForestModel, LinearSvmModel, predict_loss, train_forest, train_svm
from .propensity import (DEFAULT_CLIP, LogisticConfig, PropensityFit, fit_forest,
                         fit_logistic, oracle_fit, predict)
from .rng import RngStream
from .trees import ForestConfig
from .weights import WeightVector, estimated_weights, true_weights, unit_weights

__version__ = "0.1.0"
