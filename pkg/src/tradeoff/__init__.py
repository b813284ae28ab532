# src/tradeoff/__init__.py
"""Trade-off functions and standard-normal primitives"""
from .curves import (
    CurveKind,
    TradeoffCurve,
    Violation,
    curve_delta,
    discretize,
    evaluate,
    inverse,
    lower_convex_hull,
    mix_with_identity,
    profile_to_curve,
    sup_distance,
    symmetrize,
    validate,
)
from .grid import alpha_grid, gaussian_knots, midpoints
from .io import curve_from_json, curve_to_csv, curve_to_json, read_curve_csv, write_curve_csv
from .normal import gaussian_delta, log_normal_cdf, normal_cdf, normal_pdf, normal_primitives, normal_quantile

__all__ = [
    'CurveKind',
    'TradeoffCurve',
    'Violation',
    'alpha_grid',
    'curve_delta',
    'curve_from_json',
    'curve_to_csv',
    'curve_to_json',
    'discretize',
    'evaluate',
    'gaussian_delta',
    'gaussian_knots',
    'inverse',
    'log_normal_cdf',
    'lower_convex_hull',
    'midpoints',
    'mix_with_identity',
    'normal_cdf',
    'normal_pdf',
    'normal_primitives',
    'normal_quantile',
    'profile_to_curve',
    'read_curve_csv',
    'sup_distance',
    'symmetrize',
    'validate',
    'write_curve_csv',
]
