"""Binary regression with the SVM hinge-loss likelihood."""
from .inference import ExistenceReport, InferenceReport, check_existence, infer, sandwich_cov, wald_test
from .model import Dataset, LabeledSample, Theta, density, log_density, log_likelihood, predict_map
from .optimizer import FitResult, OptOptions, fit_approximate, fit_mle, fit_svm, minimize_bfgs

__version__ = "0.1.0"

__all__ = [
    "Dataset", "LabeledSample", "Theta", "density", "log_density", "log_likelihood", "predict_map",
    "FitResult", "OptOptions", "fit_approximate", "fit_mle", "fit_svm", "minimize_bfgs",
    "ExistenceReport", "InferenceReport", "check_existence", "infer", "sandwich_cov", "wald_test",
]
