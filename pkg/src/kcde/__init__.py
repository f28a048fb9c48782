"""Kernel CDF estimation with plug-in bandwidths, parametric fitting and inverse-transform simulation."""

__version__ = "0.1.0"

from .bandwidth import BandwidthResult, BgkConfig, bgk_bandwidth, normal_reference_bandwidth
from .distributions import FitReport, ParametricModel, fit_mle, gev_mean, model_select
from .errors import DegenerateSampleError, DomainError, NumericalError
from .estimator import KcdeModel, apply_boundary_correction, fit_kcde, staircase_cdf
from .kernels import Kernel, erf, kernel_pdf, kernel_step
from .sampler import LookupTable, build_lookup, qq_pairs, simulate

__all__ = [
    "BandwidthResult", "BgkConfig", "bgk_bandwidth", "normal_reference_bandwidth",
    "FitReport", "ParametricModel", "fit_mle", "gev_mean", "model_select",
    "DegenerateSampleError", "DomainError", "NumericalError",
    "KcdeModel", "apply_boundary_correction", "fit_kcde", "staircase_cdf",
    "Kernel", "erf", "kernel_pdf", "kernel_step",
    "LookupTable", "build_lookup", "qq_pairs", "simulate",
]
