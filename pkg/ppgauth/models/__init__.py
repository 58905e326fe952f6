from ppgauth.models.iforest import IsolationForestModel, iforest_fit, iforest_score
from ppgauth.models.scaler import Scaler, fit_scaler
from ppgauth.models.store import load_model, save_model
from ppgauth.models.svm import OneClassSvmModel, SvmModel, osvm_fit, osvm_score, svm_fit, svm_score

__all__ = [
    "IsolationForestModel",
    "OneClassSvmModel",
    "Scaler",
    "SvmModel",
    "fit_scaler",
    "iforest_fit",
    "iforest_score",
    "load_model",
    "osvm_fit",
    "osvm_score",
    "save_model",
    "svm_fit",
    "svm_score",
]
