"""Numerical lab for weighted Lorentz spaces, the Hilbert transform and weight classes."""

from .fncore import (AnalyticWeight, CumulativeWeight, Interval, MeasurableSet, PiecewiseFn, indicator,
                     integrate, measure_u, parse_weight, step)
from .operators import EvalGrid, cotlar_residual, hilbert, hilbert_max, hilbert_trunc, maximal
from .probes import probe_operator, theorem11_harness, weak_type_ratio
from .rearrange import DecreasingStep, lambda_norm, lambda_weak_norm, rearrange_u
from .verdict import FAIL, FAIL_GROWTH, INCONCLUSIVE, PASS, ClassVerdict

__version__ = "0.1.0"

__all__ = [
    "AnalyticWeight", "CumulativeWeight", "Interval", "MeasurableSet", "PiecewiseFn", "indicator",
    "integrate", "measure_u", "parse_weight", "step", "EvalGrid", "cotlar_residual", "hilbert",
    "hilbert_max", "hilbert_trunc", "maximal", "probe_operator", "theorem11_harness", "weak_type_ratio",
    "DecreasingStep", "lambda_norm", "lambda_weak_norm", "rearrange_u", "PASS", "FAIL", "FAIL_GROWTH",
    "INCONCLUSIVE", "ClassVerdict",
]
