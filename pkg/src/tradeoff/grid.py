"""
src/tradeoff/grid.py
Alpha grids used to discretize and evaluate trade-off curves
"""

import numpy as np

from src.tradeoff.normal import normal_cdf

DEFAULT_GRID_SIZE = 4097
DEFAULT_TAIL_KNOTS = 32
DEFAULT_GAUSSIAN_STEP = 1.0 / 1024
# Past this many standard deviations Phi is below 1e-28, far under any
# tolerance used for reporting.
GAUSSIAN_TAIL_SPAN = 11.0


def alpha_grid(n: int = DEFAULT_GRID_SIZE, tail_knots: int = DEFAULT_TAIL_KNOTS) -> np.ndarray:
    """
    Uniform grid on [0, 1] plus geometric clusters near both ends

    Args:
        n: Number of uniform points (including 0 and 1)
        tail_knots: Number of extra points per end, geometrically spaced
            between 1e-15 and the first uniform step

    Returns:
        Sorted array of distinct alphas starting at 0 and ending at 1
    """
    if n < 2:
        raise ValueError("alpha grid needs at least two points")
    uniform = np.linspace(0.0, 1.0, n)
    if tail_knots <= 0:
        return uniform

    h = 1.0 / (n - 1)
    tails = np.geomspace(1e-15, h, tail_knots + 1)[:-1]
    grid = np.concatenate([uniform, tails, 1.0 - tails])
    return np.unique(np.clip(grid, 0.0, 1.0))


def midpoints(grid: np.ndarray) -> np.ndarray:
    """Midpoints between consecutive grid points (where chord error peaks)"""
    return 0.5 * (grid[1:] + grid[:-1])


def gaussian_knots(mu: float, step: float = DEFAULT_GAUSSIAN_STEP, reach: float = None) -> np.ndarray:
    """
    Alpha knots for G_mu spaced evenly in the normal quantile

    The curve is traced as (Phi(-z), Phi(z - mu)); taking z = mu/2 + k*step
    makes the knot set closed under alpha <-> beta, so the piecewise-linear
    curve is exactly symmetric. The chord error is about
    step^2 * mu * phi(z - mu) / 8 everywhere on the curve.

    Args:
        mu: Gaussian parameter
        step: Spacing in z
        reach: Largest Gaussian parameter the knots must resolve (defaults to
            mu; group iteration asks for g*mu)
    """
    reach = mu if reach is None else max(reach, mu)
    half_span = max(reach - 0.5 * mu, 0.5 * mu) + GAUSSIAN_TAIL_SPAN
    k = int(np.ceil(half_span / step))
    z = 0.5 * mu + step * np.arange(-k, k + 1)
    alphas = normal_cdf(-z)
    return np.unique(np.concatenate([[0.0, 1.0], alphas]))
