"""High-order WKB quantization of the quartic oscillator with double Borel resummation.

Modules
-------
numerics
    Precision contexts and special functions.
wkb
    Exact Riccati orders and the Dunham quantization coefficients.
series
    The r, s and t expansions, growth fit and cache files.
resummation
    Borel transform, conformal re-expansion, correction integral and optimal truncation.
spectral
    Multiprecision Taylor-shooting eigenvalue solver.
experiment
    The comparison pipeline, CSV output and invariant checks.
plots
    Static SVG figures.
"""
from .experiment import ComparisonRecord, RunConfig, run_compare
from .numerics import PrecisionContext
from .resummation import BorelPlan, borel_integral, oaa_sum
from .series import CoefficientSeries, fit_growth, r_series, s_series, t_series
from .spectral import solve_eigenvalue
from .wkb import quantization_series

__version__ = "0.1.0"

__all__ = [
    "BorelPlan",
    "CoefficientSeries",
    "ComparisonRecord",
    "PrecisionContext",
    "RunConfig",
    "borel_integral",
    "fit_growth",
    "oaa_sum",
    "quantization_series",
    "r_series",
    "run_compare",
    "s_series",
    "solve_eigenvalue",
    "t_series",
]
