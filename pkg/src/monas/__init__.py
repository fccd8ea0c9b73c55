"""Multi-objective joint architecture and hyperparameter search toolkit."""

__version__ = "0.1.0"
