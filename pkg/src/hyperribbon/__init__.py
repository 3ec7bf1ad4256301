"""Hyperellipsoid bounds on the prediction manifolds of smooth multiparameter models."""

from .bounds import (
    TaylorBudget,
    WidthReport,
    add_truncation_error,
    bound_2d_sv,
    cheb_sv_bound,
    hy_cheb_bound,
    kink_split,
    rho_max,
    taylor_error_bound,
    taylor_width_bound,
    widths_from_spectrum,
)
from .chebkit import AnalyticBudget, ChebSeries, SmoothnessBudget, cheb_coeffs, cheb_eval
from .design import Grid1D, Grid2D, cheb_design, cheb_design_2d, taylor_design_2d, vandermonde_design
from .errors import HyperribbonError
from .manifold import enclosure_check, project_cloud, sample_cloud
from .models import Activation2D, ExpSumModel, ReactionModel, SIRModel, model_jet, model_value
from .spectral import SingularSpectrum, singular_values

__version__ = "0.1.0"

__all__ = [
    "Activation2D", "AnalyticBudget", "ChebSeries", "ExpSumModel", "Grid1D", "Grid2D",
    "HyperribbonError", "ReactionModel", "SIRModel", "SingularSpectrum", "SmoothnessBudget",
    "TaylorBudget", "WidthReport", "add_truncation_error", "bound_2d_sv", "cheb_coeffs",
    "cheb_design", "cheb_design_2d", "cheb_eval", "cheb_sv_bound", "enclosure_check",
    "hy_cheb_bound", "kink_split", "model_jet", "model_value", "project_cloud", "rho_max",
    "sample_cloud", "singular_values", "taylor_design_2d", "taylor_error_bound",
    "taylor_width_bound", "vandermonde_design", "widths_from_spectrum",
]
