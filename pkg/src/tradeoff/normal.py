"""
src/tradeoff/normal.py
Standard normal CDF and quantile with deep-tail accuracy
"""

import logging
from typing import Optional, Tuple, Union

import numpy as np
from scipy import special

from src.utils.errors import PrivacyDomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)


def normal_cdf(x: ArrayLike) -> ArrayLike:
    """
    Standard normal CDF through the complementary error function

    Phi(x) = erfc(-x / sqrt(2)) / 2 keeps full relative accuracy in the lower
    tail, which is where trade-off curves and delta(eps) live.
    """
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / _SQRT2)


def normal_pdf(x: ArrayLike) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / _SQRT2PI


def log_normal_cdf(x: ArrayLike) -> ArrayLike:
    return special.log_ndtr(np.asarray(x, dtype=float))


def normal_quantile(q: ArrayLike) -> ArrayLike:
    """
    Inverse standard normal CDF

    Args:
        q: Probability strictly inside (0, 1), scalar or array

    Returns:
        x with Phi(x) = q

    Raises:
        PrivacyDomainError: if any q is outside (0, 1)
    """
    q_arr = np.asarray(q, dtype=float)
    if np.any(~((q_arr > 0.0) & (q_arr < 1.0))):
        raise PrivacyDomainError(f"normal quantile needs q in (0, 1), got {q}")

    x = special.ndtri(q_arr)

    # One Newton step on the side where the residual is computed without
    # cancellation: Phi(x) - q for the lower half, Phi(-x) - (1 - q) above.
    lower = q_arr <= 0.5
    resid = np.where(lower, normal_cdf(x) - q_arr, (1.0 - q_arr) - normal_cdf(-x))
    pdf = normal_pdf(x)
    step = np.divide(resid, pdf, out=np.zeros_like(x), where=pdf > 0)
    x = x - step

    if np.ndim(q) == 0:
        return float(x)
    return x


def normal_primitives(x: float) -> Tuple[float, Optional[float]]:
    """
    Evaluate both standard normal primitives at x

    Returns:
        (Phi(x), Phi^{-1}(x)); the quantile is None unless 0 < x < 1
    """
    cdf = float(normal_cdf(x))
    quantile = normal_quantile(x) if 0.0 < x < 1.0 else None
    return cdf, quantile


def gaussian_delta(mu: float, eps: ArrayLike) -> ArrayLike:
    """
    Hockey-stick divergence between N(mu, 1) and N(0, 1)

    delta(eps) = Phi(-eps/mu + mu/2) - e^eps * Phi(-eps/mu - mu/2), valid for
    every real eps. Nonnegative eps is evaluated in log space so that deep
    tails keep their relative accuracy; negative eps goes through the mirror
    identity delta(-x) = 1 - e^{-x} + e^{-x} delta(x).

    Args:
        mu: Gaussian parameter, mu >= 0
        eps: Scalar or array of privacy-loss thresholds
    """
    x = np.asarray(eps, dtype=float)
    pos = np.abs(x)
    if mu == 0.0:
        upper = np.zeros_like(pos)
    else:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            log_a = special.log_ndtr(-pos / mu + 0.5 * mu)
            log_b = pos + special.log_ndtr(-pos / mu - 0.5 * mu)
            upper = np.exp(log_a) * -np.expm1(log_b - log_a)
        upper = np.where(np.isfinite(upper), upper, 0.0)
        upper = np.clip(upper, 0.0, 1.0)

    out = np.where(x >= 0.0, upper, -np.expm1(x) + np.exp(x) * upper)
    if np.ndim(eps) == 0:
        return float(out)
    return out
