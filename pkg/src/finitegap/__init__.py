"""Finite-gap approximation of closed curves in hyperbolic space."""

from .closing import (
    ClosureReport,
    NewtonResult,
    NewtonTarget,
    PipelineResult,
    close_by_dressing,
    closure_residual,
    finite_gap_approximate,
    finite_gap_approximate_real,
    newton_close,
    select_directions,
    truncate_coeffs,
)
from .config import Settings
from .dressing import SimpleFactor, dress_potential, dressed_monodromy, simple_factor_eval
from .errors import FiniteGapError, InputError, NumericalError
from .frame import discriminant, floquet_mu, integrate_frame, monodromy
from .potential import CurveSamples, Potential, gauge_periodic, hasimoto_curvature, l2_distance
from .reconstruct import curve_closure_gap, frenet_data, sym_reconstruct
from .sl2core import CPLine
from .spectral import (
    baker_akhiezer_line,
    directional_derivative_delta,
    eigen_projector,
    find_lambda_k,
    perturbed_coeffs,
    zero_order_at,
)

__version__ = "0.1.0"

__all__ = [
    "baker_akhiezer_line",
    "close_by_dressing",
    "closure_residual",
    "ClosureReport",
    "CPLine",
    "curve_closure_gap",
    "CurveSamples",
    "directional_derivative_delta",
    "discriminant",
    "dress_potential",
    "dressed_monodromy",
    "eigen_projector",
    "find_lambda_k",
    "finite_gap_approximate",
    "finite_gap_approximate_real",
    "FiniteGapError",
    "floquet_mu",
    "frenet_data",
    "gauge_periodic",
    "hasimoto_curvature",
    "InputError",
    "integrate_frame",
    "l2_distance",
    "monodromy",
    "newton_close",
    "NewtonResult",
    "NewtonTarget",
    "NumericalError",
    "perturbed_coeffs",
    "PipelineResult",
    "Potential",
    "select_directions",
    "Settings",
    "simple_factor_eval",
    "SimpleFactor",
    "sym_reconstruct",
    "truncate_coeffs",
    "zero_order_at",
]
