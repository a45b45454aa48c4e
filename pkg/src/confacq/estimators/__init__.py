from .attribute import AttributeModel, fit_attribute_model, predict_attribute
from .effect import (
    ESTIMATORS,
    DoublyRobustEstimator,
    EffectEstimator,
    EstimatorError,
    GPMultiEstimator,
    MLPMultiEstimator,
    TwoHeadEstimator,
    design,
    estimate_ate,
    fit_estimator,
)
from .forest import RandomForest
from .gp import GaussianProcessRegressor
from .nets import FeedForward

__all__ = [
    "AttributeModel",
    "DoublyRobustEstimator",
    "ESTIMATORS",
    "EffectEstimator",
    "EstimatorError",
    "FeedForward",
    "GPMultiEstimator",
    "GaussianProcessRegressor",
    "MLPMultiEstimator",
    "RandomForest",
    "TwoHeadEstimator",
    "design",
    "estimate_ate",
    "fit_attribute_model",
    "fit_estimator",
    "predict_attribute",
]
