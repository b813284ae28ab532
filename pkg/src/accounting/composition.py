"""
src/accounting/composition.py
Gaussian composition, the central-limit asymptote for DP-SGD and sigma planning
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import integrate

from src.accounting.gaussian_dp import GdpGuarantee
from src.tradeoff.normal import normal_cdf
from src.utils.errors import AsymptoticRegimeError, PrivacyDomainError

logger = logging.getLogger(__name__)

CLT_MIN_SIGMA = 0.5
LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def round_count(N: int, m: int, E: float) -> int:
    """Rounds needed to touch N * E examples in batches of m; fractional epochs round up"""
    # rounding first keeps 0.1 * 30 from becoming 3.0000000000000004
    return max(1, math.ceil(round(N * E / m, 9)))


@dataclass(frozen=True)
class PlanInput:
    """
    DP-SGD plan for one client

    Attributes:
        N: Local data set size
        m: Batch size
        E: Number of epochs
        sigma: Noise multiplier
    """
    N: int
    m: int
    E: float
    sigma: float

    def __post_init__(self):
        if self.N < 1 or self.m < 1:
            raise PrivacyDomainError(f"N and m must be positive, got N={self.N}, m={self.m}")
        if self.m > self.N:
            raise PrivacyDomainError(f"batch size m={self.m} exceeds data set size N={self.N}")
        if not self.E > 0:
            raise PrivacyDomainError(f"E must be positive, got {self.E}")
        if not self.sigma > 0:
            raise PrivacyDomainError(f"sigma must be positive, got {self.sigma}")

    @property
    def p(self) -> float:
        return self.m / self.N

    @property
    def T(self) -> int:
        """Round complexity ceil((N/m) * E)"""
        return round_count(self.N, self.m, self.E)


@dataclass(frozen=True)
class CalibratedSigma:
    sigma: float
    certified: bool
    max_rounds: float


def compose_gaussian(mus: Iterable[float]) -> GdpGuarantee:
    """G_mu1 x ... x G_muk = G_mu with mu = sqrt(sum mu_i^2)"""
    mus = np.asarray(list(mus), dtype=float)
    if np.any(mus < 0):
        raise PrivacyDomainError(f"every mu must be >= 0, got {mus.tolist()}")
    return GdpGuarantee(float(np.sqrt(np.sum(mus * mus))))


def h_of_sigma(sigma: float) -> float:
    """
    h(sigma) = sqrt(2 (e^{1/sigma^2} Phi(3/(2 sigma)) + 3 Phi(-1/(2 sigma)) - 2))

    T rounds of C_p(G_{1/sigma}) approach G_mu with mu = p sqrt(T) h(sigma).
    For large sigma, sigma*h(sigma) tends to 1 from above.
    """
    if not sigma > 0:
        raise PrivacyDomainError(f"sigma must be positive, got {sigma}")
    s = 1.0 / sigma
    inner = np.exp(s * s) * normal_cdf(1.5 * s) + 3.0 * normal_cdf(-0.5 * s) - 2.0
    return float(np.sqrt(2.0 * inner))


def h_of_sigma_quadrature(sigma: float) -> float:
    """
    h(sigma) from its defining integral

    h^2/2 = int_{mu/2}^inf (e^{mu x - mu^2/2} - 1)^2 phi(x) dx with mu = 1/sigma.
    """
    if not sigma > 0:
        raise PrivacyDomainError(f"sigma must be positive, got {sigma}")
    mu = 1.0 / sigma

    def integrand(x):
        # log of (e^t - 1)^2 phi(x) with t >= 0; the factors overflow separately
        t = max(mu * x - 0.5 * mu * mu, 0.0)
        with np.errstate(divide="ignore"):
            log_value = 2.0 * (t + np.log(-np.expm1(-t))) - 0.5 * x * x - LOG_SQRT_2PI
        return float(np.exp(log_value))

    value, _ = integrate.quad(integrand, 0.5 * mu, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return float(np.sqrt(2.0 * value))


def clt_mu_rounds(p: float, sigma: float, T: int, min_sigma: float = CLT_MIN_SIGMA) -> GdpGuarantee:
    """
    Asymptotic mu for T rounds of C_p(G_{1/sigma})

    Raises:
        AsymptoticRegimeError: if sigma < min_sigma, where h(sigma) blows up
            like e^{1/(2 sigma^2)} and the asymptote means nothing
    """
    if not 0.0 <= p <= 1.0:
        raise PrivacyDomainError(f"sampling rate must lie in [0, 1], got {p}")
    if sigma < min_sigma:
        raise AsymptoticRegimeError(
            f"CLT approximation refused for sigma={sigma:g} < {min_sigma:g}"
        )
    return GdpGuarantee(float(p * np.sqrt(T) * h_of_sigma(sigma)), asymptotic=True)


def clt_mu(plan: PlanInput, min_sigma: float = CLT_MIN_SIGMA) -> GdpGuarantee:
    """mu = sqrt(mE/N) * h(sigma), valid for large N and E"""
    c = np.sqrt(plan.m * plan.E / plan.N)
    if plan.sigma < min_sigma:
        raise AsymptoticRegimeError(
            f"CLT approximation refused for sigma={plan.sigma:g} < {min_sigma:g}"
        )
    return GdpGuarantee(float(c * h_of_sigma(plan.sigma)), asymptotic=True)


def sigma_for_budget(eps: float, delta: float, N: int, m: int, T: float) -> CalibratedSigma:
    """
    Noise multiplier for an (eps, delta) target

    sigma = sqrt(2 (eps + ln(1/delta)) / eps), certified only while
    T <= eps (N/m)^2 / 2.
    """
    if not eps > 0:
        raise PrivacyDomainError(f"eps must be positive, got {eps}")
    if not 0.0 < delta < 1.0:
        raise PrivacyDomainError(f"delta must lie in (0, 1), got {delta}")
    if N < 1 or m < 1 or m > N:
        raise PrivacyDomainError(f"need 1 <= m <= N, got N={N}, m={m}")

    sigma = float(np.sqrt(2.0 * (eps + np.log(1.0 / delta)) / eps))
    max_rounds = eps * (N / m) ** 2 / 2.0
    certified = T <= max_rounds
    if not certified:
        logger.warning(f"T={T:g} exceeds {max_rounds:g}; sigma={sigma:.4f} is not certified")
    return CalibratedSigma(sigma=sigma, certified=bool(certified), max_rounds=float(max_rounds))
