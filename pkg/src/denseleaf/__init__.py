"""Density estimation by undersmoothed kernel pseudo-responses and sparse ReLU regression."""
from .kde import Dataset, kde_eval, theory_bandwidth
from .kernels import KernelSpec, build_order_kernel
from .twostage import EstimatorHandle, RiskReport, evaluate, fit_fd, fit_kde_reference, fit_sd

__version__ = "0.1.0"

__all__ = [
    "Dataset", "kde_eval", "theory_bandwidth", "KernelSpec", "build_order_kernel",
    "EstimatorHandle", "RiskReport", "evaluate", "fit_fd", "fit_kde_reference", "fit_sd",
]
