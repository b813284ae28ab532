"""
src/accounting/subsampling.py
Privacy amplification by subsampling and its Neyman-Pearson oracle
"""

import logging

import numpy as np
from scipy import special

from src.tradeoff.curves import (
    CurveKind,
    TradeoffCurve,
    lower_convex_hull,
    mix_with_identity,
    symmetrize,
)
from src.utils.errors import PrivacyDomainError

logger = logging.getLogger(__name__)

ORACLE_GRID_SIZE = 20001
ORACLE_SPAN = 10.0  # standard deviations covered on each side


def cp_operator(f: TradeoffCurve, p: float) -> TradeoffCurve:
    """
    Subsampling operator C_p(f) = min{f_p, f_p^{-1}}**

    with f_p = p*f + (1-p)*(1-alpha). f should be symmetric; asymmetric input
    is symmetrized first.

    Args:
        f: Trade-off curve of one full-data round
        p: Sampling rate in [0, 1]

    Raises:
        PrivacyDomainError: if p lies outside [0, 1]
    """
    if not 0.0 <= p <= 1.0:
        raise PrivacyDomainError(f"sampling rate must lie in [0, 1], got {p}")
    if p == 0.0 or f.kind == CurveKind.PERFECT:
        return TradeoffCurve.perfect()

    f = symmetrize(f)
    if p == 1.0:
        return f

    result = symmetrize(mix_with_identity(f, p))
    logger.debug(f"C_{p:g}({f!r}) on {len(result.alphas)} knots")
    return result


def np_mixture_oracle(p: float, sigma: float, grid: int = ORACLE_GRID_SIZE) -> TradeoffCurve:
    """
    Brute-force optimal test of N(0, s^2) against (1-p) N(0, s^2) + p N(1, s^2)

    The real line is cut into `grid - 1` bins over [-10s, 1 + 10s] plus two
    unbounded tail bins. Bins are ordered by decreasing likelihood ratio and
    accumulated: each prefix is a rejection region, giving one (alpha, beta)
    point. The lower convex hull of those points (randomized tests) is the
    one-sided curve f_p; symmetrizing it is left to the caller.

    Args:
        p: Sampling rate in [0, 1]
        sigma: Noise standard deviation per unit sensitivity
        grid: Number of bin edges
    """
    if not 0.0 <= p <= 1.0:
        raise PrivacyDomainError(f"sampling rate must lie in [0, 1], got {p}")
    if not sigma > 0:
        raise PrivacyDomainError(f"sigma must be positive, got {sigma}")
    if p == 0.0:
        return TradeoffCurve.perfect()

    edges = np.linspace(-ORACLE_SPAN * sigma, 1.0 + ORACLE_SPAN * sigma, grid)
    null_mass = _bin_masses(edges / sigma)
    shifted_mass = _bin_masses((edges - 1.0) / sigma)
    alt_mass = (1.0 - p) * null_mass + p * shifted_mass

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(null_mass > 0.0, alt_mass / null_mass, np.inf)
    order = np.argsort(-ratio, kind="stable")

    alphas = np.concatenate([[0.0], np.cumsum(null_mass[order])])
    betas = 1.0 - np.concatenate([[0.0], np.cumsum(alt_mass[order])])
    alphas /= alphas[-1]
    betas[-1] = 0.0

    # zero-mass bins repeat an alpha; the last of each run has the lowest beta
    last = np.append(alphas[1:] != alphas[:-1], True)
    hx, hy = lower_convex_hull(alphas[last], np.clip(betas[last], 0.0, 1.0))
    return TradeoffCurve.piecewise(hx, hy, grid_approximate=True)


def _bin_masses(z_edges: np.ndarray) -> np.ndarray:
    """
    Standard normal mass of (-inf, z0], each [z_i, z_{i+1}] and [z_n, inf)

    Right of zero the differences use upper-tail probabilities so tiny masses
    keep their precision.
    """
    lower = special.ndtr(z_edges)
    upper = special.ndtr(-z_edges)
    inner = np.where(z_edges[:-1] >= 0.0, upper[:-1] - upper[1:], lower[1:] - lower[:-1])
    return np.concatenate([[lower[0]], np.maximum(inner, 0.0), [upper[-1]]])
