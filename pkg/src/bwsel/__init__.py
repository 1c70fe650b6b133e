"""Bandwidth selection for kernel density estimation: classical, indirect and
one-sided cross-validation, do-validation, plug-in and a median combiner,
with asymptotic-variance constants and a Monte Carlo harness."""

__version__ = "0.1.0"

from .density import CVScore, DensityEstimate, Sample, cv_score, kde_evaluate, oscv_score, read_sample
from .kernels import (
    Kernel,
    KernelFunctionals,
    epanechnikov,
    gaussian,
    kernel_from_name,
    onesided_equivalent,
    polynomial,
    quartic,
    rescale_factor,
)
from .selectors import SelectionError, SelectionResult, SelectorSpec, parse_selector, select

__all__ = [
    "__version__",
    "CVScore",
    "DensityEstimate",
    "Sample",
    "cv_score",
    "kde_evaluate",
    "oscv_score",
    "read_sample",
    "Kernel",
    "KernelFunctionals",
    "epanechnikov",
    "gaussian",
    "kernel_from_name",
    "onesided_equivalent",
    "polynomial",
    "quartic",
    "rescale_factor",
    "SelectionError",
    "SelectionResult",
    "SelectorSpec",
    "parse_selector",
    "select",
]
