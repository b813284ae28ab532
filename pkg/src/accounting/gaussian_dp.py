"""
src/accounting/gaussian_dp.py
Gaussian-DP and (eps, delta)-DP families, conversions and group privacy
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, special

from src.tradeoff.curves import (
    CurveKind,
    TradeoffCurve,
    discretize,
    evaluate,
    lower_convex_hull,
)
from src.tradeoff.grid import DEFAULT_GAUSSIAN_STEP
from src.tradeoff.normal import gaussian_delta
from src.utils.errors import PrivacyDomainError, UnreachableDeltaError

logger = logging.getLogger(__name__)

GROUP_GRID_SIZE = 16385
EPS_TOLERANCE = 1e-12


@dataclass(frozen=True)
class GdpGuarantee:
    """mu-Gaussian DP; mu=0 is perfect privacy"""
    mu: float
    asymptotic: bool = False

    def __post_init__(self):
        if not np.isfinite(self.mu) or self.mu < 0:
            raise PrivacyDomainError(f"mu must be >= 0, got {self.mu}")

    def curve(self) -> TradeoffCurve:
        return gaussian_curve(self.mu)

    def to_dict(self) -> dict:
        return {"mu": self.mu}


@dataclass(frozen=True)
class EpsDeltaGuarantee:
    eps: float
    delta: float
    vacuous: bool = False

    def __post_init__(self):
        if not self.eps >= 0:
            raise PrivacyDomainError(f"eps must be >= 0, got {self.eps}")
        if not 0.0 <= self.delta <= 1.0:
            raise PrivacyDomainError(f"delta must lie in [0, 1], got {self.delta}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DivergenceGuarantee:
    """rho-zCDP together with the (omega, tau)-RDP point it implies"""
    rho: float
    omega: float
    tau: float

    def rdp(self, omega: float) -> float:
        """tau(omega) = rho * omega for any order omega > 1"""
        if not omega > 1:
            raise PrivacyDomainError(f"Renyi order must exceed 1, got {omega}")
        return self.rho * omega

    def to_dict(self) -> dict:
        return asdict(self)


def gaussian_curve(mu: float) -> TradeoffCurve:
    """
    G_mu(alpha) = Phi(Phi^{-1}(1 - alpha) - mu)

    Raises:
        PrivacyDomainError: if mu < 0
    """
    if mu == 0:
        return TradeoffCurve.perfect()
    return TradeoffCurve.gaussian(mu)


def epsdelta_curve(eps: float, delta: float) -> TradeoffCurve:
    if eps == 0 and delta == 0:
        return TradeoffCurve.perfect()
    return TradeoffCurve.eps_delta(eps, delta)


def delta_of_eps(mu: float, eps):
    """
    delta(eps) = Phi(-eps/mu + mu/2) - e^eps * Phi(-eps/mu - mu/2)

    A mechanism is mu-GDP iff it is (eps, delta(eps))-DP for every eps >= 0.

    Args:
        mu: Gaussian parameter, mu >= 0
        eps: Scalar or array of eps >= 0

    Returns:
        delta in [0, 1); exactly 0 when mu = 0
    """
    if not np.isfinite(mu) or mu < 0:
        raise PrivacyDomainError(f"mu must be >= 0, got {mu}")
    if np.any(np.asarray(eps) < 0):
        raise PrivacyDomainError(f"eps must be >= 0, got {eps}")
    return gaussian_delta(mu, eps)


def eps_of_delta(mu: float, delta: float) -> float:
    """
    Smallest eps >= 0 with delta_of_eps(mu, eps) <= delta

    Raises:
        UnreachableDeltaError: if delta = 0 while mu > 0
        PrivacyDomainError: if delta lies outside [0, 1]
    """
    if not 0.0 <= delta <= 1.0:
        raise PrivacyDomainError(f"delta must lie in (0, 1], got {delta}")
    if mu == 0:
        return 0.0
    if delta == 0.0:
        raise UnreachableDeltaError(f"delta=0 cannot be met by a {mu}-GDP mechanism")
    if delta >= delta_of_eps(mu, 0.0):
        return 0.0

    hi = 0.5 * mu * mu + mu * np.sqrt(2.0 * np.log(1.0 / delta)) + 1.0
    while delta_of_eps(mu, hi) > delta:
        hi *= 2.0
    return float(optimize.brentq(lambda e: delta_of_eps(mu, e) - delta, 0.0, hi,
                                 xtol=EPS_TOLERANCE))


def divergence_of_gdp(mu: float, omega: float = 2.0, group: int = 1) -> DivergenceGuarantee:
    """
    zCDP and RDP implied by mu-GDP for groups of size g

    rho = (g * mu)^2 / 2 and tau(omega) = rho * omega.
    """
    if not omega > 1:
        raise PrivacyDomainError(f"Renyi order must exceed 1, got {omega}")
    if group < 1:
        raise PrivacyDomainError(f"group size must be >= 1, got {group}")
    if mu < 0:
        raise PrivacyDomainError(f"mu must be >= 0, got {mu}")

    scaled = group * mu
    rho = 0.5 * scaled * scaled
    return DivergenceGuarantee(rho=rho, omega=float(omega), tau=rho * omega)


def group_curve(f: TradeoffCurve, g: int, grid_size: int = GROUP_GRID_SIZE,
                knot_step: float = DEFAULT_GAUSSIAN_STEP) -> TradeoffCurve:
    """
    Group-privacy curve 1 - (1 - f)^{og}

    The map alpha -> 1 - f(alpha) is iterated g times on a dense grid (plus the
    Gaussian quantile knots reaching out to g*mu), then the points are
    re-convexified. Analytic curves are evaluated in closed form at every
    iteration, so only the final interpolation is approximate.

    Args:
        f: Trade-off curve
        g: Group size, g >= 1
        grid_size: Number of uniform alpha points
        knot_step: Quantile spacing of the Gaussian knots
    """
    if g < 1 or int(g) != g:
        raise PrivacyDomainError(f"group size must be a positive integer, got {g}")
    if g == 1 or f.kind == CurveKind.PERFECT:
        return f

    if f.kind == CurveKind.GAUSSIAN:
        knots = discretize(f, step=knot_step, reach=g * f.mu).alphas
    else:
        knots = discretize(f).alphas
    alphas = np.union1d(knots, np.linspace(0.0, 1.0, grid_size))

    a = alphas
    for _ in range(int(g)):
        a = _complement(f, np.clip(a, 0.0, 1.0))
    betas = np.clip(1.0 - a, 0.0, 1.0)

    hx, hy = lower_convex_hull(alphas, betas)
    gap = float(np.max(betas - np.interp(alphas, hx, hy)))
    logger.debug(f"Group curve g={g}: {len(hx)} knots, convexification gap {gap:.3e}")

    return TradeoffCurve.piecewise(hx, hy, grid_approximate=True)


def _complement(f: TradeoffCurve, a: np.ndarray) -> np.ndarray:
    """
    1 - f(a) without cancellation for the analytic families

    Deep in the tail f(a) rounds to 1, so the subtraction would lose the
    tiny type II complement that the next group iteration starts from.
    """
    if f.kind == CurveKind.GAUSSIAN:
        with np.errstate(over="ignore", invalid="ignore"):
            return special.ndtr(special.ndtri(a) + f.mu)
    if f.kind == CurveKind.EPS_DELTA:
        e = np.exp(f.eps)
        return np.minimum.reduce([
            np.ones_like(a),
            f.delta + e * a,
            1.0 - (1.0 - f.delta - a) / e,
        ])
    return 1.0 - evaluate(f, a)


def advanced_composition(eps: float, delta_prime: float, delta: float, k: int) -> EpsDeltaGuarantee:
    """
    k-fold adaptive composition of (eps, delta')-DP mechanisms

    Returns (sqrt(2k ln(1/delta)) * eps + k*eps*(e^eps - 1)/2, k*delta' + delta),
    flagged vacuous (and delta capped at 1) when the failure probability
    reaches 1.
    """
    if eps < 0 or not 0.0 <= delta_prime <= 1.0 or not 0.0 <= delta <= 1.0:
        raise PrivacyDomainError("eps must be >= 0 and deltas must lie in [0, 1]")
    if delta == 0.0:
        raise PrivacyDomainError("advanced composition needs delta > 0")
    if k < 1:
        raise PrivacyDomainError(f"k must be a positive integer, got {k}")

    total_eps = np.sqrt(2.0 * k * np.log(1.0 / delta)) * eps + k * eps * np.expm1(eps) / 2.0
    total_delta = k * delta_prime + delta
    vacuous = total_delta >= 1.0
    if vacuous:
        logger.warning(f"Advanced composition over k={k} rounds is vacuous (delta={total_delta:g})")
    return EpsDeltaGuarantee(float(total_eps), min(1.0, float(total_delta)), vacuous)


def epsdelta_group(eps: float, delta: float, g: int) -> EpsDeltaGuarantee:
    """(eps, delta)-DP for groups of size g: (g*eps, g*e^{g-1}*delta)"""
    if g < 1:
        raise PrivacyDomainError(f"group size must be >= 1, got {g}")
    if g == 1:
        return EpsDeltaGuarantee(eps, delta)

    scaled = g * np.exp(g - 1) * delta
    vacuous = scaled >= 1.0
    return EpsDeltaGuarantee(float(g * eps), min(1.0, float(scaled)), vacuous)
