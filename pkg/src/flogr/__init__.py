"""Robust functional PLS for scalar-on-function logistic regression."""

from flogr.basis import (
    BSplineBasis,
    CoefficientFunction,
    FunctionalDataset,
    SamplingGrid,
    build_bspline_basis,
    evaluate_basis,
    evaluate_coef_function,
    fit_coefficients,
    gram_matrix,
    integrate_product,
)
from flogr.baselines import FpcModel, fit_fpc, fit_fpls, predict_fpc, predict_fpls
from flogr.estimators import FPCClassifier, FPLSClassifier, RobustFPLSClassifier
from flogr.exceptions import (
    CompatibilityError,
    ConfigurationError,
    DataError,
    DomainError,
    EstimationError,
    SeparationError,
    SingularFitError,
)
from flogr.metrics import EvalReport, auc, ccr, evaluate, imse
from flogr.rfpls import RfplsConfig, RfplsModel, fit_rfpls, predict
from flogr.wle import LogitFit, WleConfig, fit_mle_logit, fit_wle_logit

__version__ = "0.1.0"

__all__ = [
    "BSplineBasis",
    "CoefficientFunction",
    "CompatibilityError",
    "ConfigurationError",
    "DataError",
    "DomainError",
    "EstimationError",
    "EvalReport",
    "FPCClassifier",
    "FPLSClassifier",
    "FpcModel",
    "FunctionalDataset",
    "LogitFit",
    "RfplsConfig",
    "RfplsModel",
    "RobustFPLSClassifier",
    "SamplingGrid",
    "SeparationError",
    "SingularFitError",
    "WleConfig",
    "auc",
    "build_bspline_basis",
    "ccr",
    "evaluate",
    "evaluate_basis",
    "evaluate_coef_function",
    "fit_coefficients",
    "fit_fpc",
    "fit_fpls",
    "fit_mle_logit",
    "fit_rfpls",
    "fit_wle_logit",
    "gram_matrix",
    "imse",
    "integrate_product",
    "predict",
    "predict_fpc",
    "predict_fpls",
]
