"""From-scratch learners: linear models, k-NN, forests, boosting, calibrators."""

from .boosting import GradientBoosting, fit_gbt
from .calibration import (
    BinningCalibrator,
    IdentityCalibrator,
    IsotonicCalibrator,
    PlattCalibrator,
    fit_binning,
    fit_isotonic,
    fit_platt,
    make_calibrator,
    pava,
)
from .forest import Forest, ForestClassifier, fit_forest
from .knn import KNNRegressor, fit_knn
from .linear import (
    LogisticClassifier,
    OLSRegressor,
    SingularDesignError,
    clamp_proba,
    fit_logistic,
    fit_ols,
)
from .model_selection import (
    LearnerConfig,
    classifier_candidates,
    fit_classifier,
    fit_regressor,
    log_loss,
    make_classifier,
    make_regressor,
    regressor_candidates,
    select_learner,
)
from ._tree import RegressionTree

__all__ = [
    "GradientBoosting", "fit_gbt",
    "BinningCalibrator", "IdentityCalibrator", "IsotonicCalibrator", "PlattCalibrator",
    "fit_binning", "fit_isotonic", "fit_platt", "make_calibrator", "pava",
    "Forest", "ForestClassifier", "fit_forest",
    "KNNRegressor", "fit_knn",
    "LogisticClassifier", "OLSRegressor", "SingularDesignError",
    "clamp_proba", "fit_logistic", "fit_ols",
    "LearnerConfig", "classifier_candidates", "fit_classifier", "fit_regressor",
    "log_loss", "make_classifier", "make_regressor", "regressor_candidates",
    "select_learner",
    "RegressionTree",
]
