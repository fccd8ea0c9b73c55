from monas.surrogate.ensemble import EnsemblePredictor, ensemble_fit
from monas.surrogate.gp import GPFitError, GPModel, gp_fit, gp_predict
from monas.surrogate.kde import KDE1D, KDEPair, density_ratio, kde_fit

__all__ = [
    "EnsemblePredictor", "ensemble_fit",
    "GPFitError", "GPModel", "gp_fit", "gp_predict",
    "KDE1D", "KDEPair", "density_ratio", "kde_fit",
]
