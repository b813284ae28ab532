"""
src/accounting/pld.py
Numeric composition of subsampled-Gaussian rounds through privacy-loss distributions
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize, signal

from src.tradeoff.normal import gaussian_delta
from src.utils.errors import PrivacyDomainError, ResolutionError, UnreachableDeltaError

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 1e-4
DEFAULT_TAIL_SIGMAS = 12.0
DEFAULT_TARGET_DELTA = 1e-5
# Tail mass below this is folded away after every operation
TRIM_MASS = 1e-18


@dataclass(frozen=True)
class RoundSpec:
    """
    count identical rounds of C_p(G_{1/sigma})

    Attributes:
        p: Sampling rate m/N
        sigma: Noise multiplier per unit sensitivity
        count: Number of rounds
    """
    p: float
    sigma: float
    count: int = 1

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise PrivacyDomainError(f"sampling rate must lie in [0, 1], got {self.p}")
        if not self.sigma > 0 or not np.isfinite(self.sigma):
            raise PrivacyDomainError(f"sigma must be a positive number, got {self.sigma}")
        if int(self.count) != self.count or self.count < 1:
            raise PrivacyDomainError(f"round count must be a positive integer, got {self.count}")

    def same_mechanism(self, other: "RoundSpec") -> bool:
        return self.p == other.p and self.sigma == other.sigma

    def to_dict(self) -> dict:
        return {"p": self.p, "sigma": self.sigma, "count": int(self.count)}


def remove_profile(p: float, sigma: float, eps: np.ndarray) -> np.ndarray:
    """
    Excess delta(eps) - (1 - e^eps)_+ of the mixture against N(0, sigma^2)

    Hockey-stick divergence of (1-p) N(0, s^2) + p N(1, s^2) from N(0, s^2),
    written through the Gaussian divergence at a shifted threshold.
    """
    mu = 1.0 / sigma
    eps = np.asarray(eps, dtype=float)
    out = np.zeros_like(eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        shifted = np.log((np.expm1(eps) + p) / p)
    live = np.expm1(eps) + p > 0.0
    neg = live & (eps < 0.0)
    pos = eps >= 0.0
    out[neg] = (np.expm1(eps[neg]) + p) * gaussian_delta(mu, -shifted[neg])
    out[pos] = p * gaussian_delta(mu, shifted[pos])
    return out


def add_profile(p: float, sigma: float, eps: np.ndarray) -> np.ndarray:
    """
    Excess delta(eps) - (1 - e^eps)_+ of N(0, sigma^2) against the mixture
    """
    mu = 1.0 / sigma
    eps = np.asarray(eps, dtype=float)
    out = np.zeros_like(eps)
    weight = -np.expm1(eps + np.log1p(-p)) if p < 1.0 else np.ones_like(eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        shifted = np.log((p + np.expm1(-eps)) / p)
    neg = eps < 0.0
    pos = (eps >= 0.0) & (weight > 0.0)
    out[neg] = np.exp(eps[neg]) * p * gaussian_delta(mu, shifted[neg])
    out[pos] = weight[pos] * gaussian_delta(mu, -shifted[pos])
    return out


def round_profile(p: float, sigma: float, eps: np.ndarray) -> np.ndarray:
    """Excess delta of one symmetrized round C_p(G_{1/sigma})"""
    return np.maximum(remove_profile(p, sigma, eps), add_profile(p, sigma, eps))


@dataclass(frozen=True, eq=False)
class PrivacyLossDistribution:
    """
    Discrete privacy-loss distribution

    masses[i] sits at loss (offset + i) * resolution; infinity_mass is the
    probability of an infinite loss. overflow counts the part of
    infinity_mass that came from truncation rather than from the mechanism.
    """
    masses: np.ndarray
    offset: int
    resolution: float
    infinity_mass: float = 0.0
    overflow: float = 0.0

    @classmethod
    def identity(cls, resolution: float = DEFAULT_RESOLUTION) -> "PrivacyLossDistribution":
        return cls(np.ones(1), 0, resolution)

    @classmethod
    def from_profile(cls, excess: Callable[[np.ndarray], np.ndarray], window: float,
                     resolution: float = DEFAULT_RESOLUTION) -> "PrivacyLossDistribution":
        """
        Pessimistic loss distribution for a privacy profile

        The profile is delta(eps) = (1 - e^eps)_+ + excess(eps). Viewed as a
        function of t = e^eps it is convex, and its chords through the grid
        points eps_i = i * resolution over [-window, window] upper-bound it.
        Each kink of that piecewise-linear function is one atom of the
        returned distribution, so delta is exact on the grid and
        over-estimated between grid points.

        Args:
            excess: delta(eps) - (1 - e^eps)_+ evaluated on an array
            window: Half-width of the loss grid
            resolution: Loss grid spacing
        """
        k = int(np.ceil(window / resolution))
        eps = resolution * np.arange(-k, k + 1)
        t = np.exp(eps)
        r = np.asarray(excess(eps), dtype=float)

        dt = t[:-1] * np.expm1(resolution)
        slopes = np.concatenate([[r[0] / t[0]], np.diff(r) / dt, [0.0]])
        masses = t * np.diff(slopes)
        masses[k] += 1.0
        masses = np.maximum(masses, 0.0)

        pld = cls(masses, -k, resolution, infinity_mass=float(r[-1]))
        return pld.trim()

    @classmethod
    def subsampled_gaussian(cls, p: float, sigma: float,
                            resolution: float = DEFAULT_RESOLUTION,
                            tail_sigmas: float = DEFAULT_TAIL_SIGMAS) -> "PrivacyLossDistribution":
        """One round of C_p(G_{1/sigma}); p = 0 gives the identity"""
        if p == 0.0:
            return cls.identity(resolution)
        mu = 1.0 / sigma
        window = mu * (tail_sigmas + 0.5 * mu)
        pld = cls.from_profile(lambda e: round_profile(p, sigma, e), window, resolution)
        logger.debug(f"Round PLD p={p:g} sigma={sigma:g}: {len(pld.masses)} atoms, "
                     f"infinity mass {pld.infinity_mass:.3e}")
        return pld

    @property
    def losses(self) -> np.ndarray:
        return self.resolution * (self.offset + np.arange(len(self.masses)))

    def moments(self):
        """Mean and variance of the finite part"""
        total = float(np.sum(self.masses))
        if total <= 0.0:
            return 0.0, 0.0
        losses = self.losses
        mean = float(np.sum(self.masses * losses) / total)
        var = float(np.sum(self.masses * (losses - mean) ** 2) / total)
        return mean, var

    def trim(self, mass: float = TRIM_MASS) -> "PrivacyLossDistribution":
        """
        Drop negligible tails pessimistically

        Top-tail mass moves to infinity, bottom-tail mass moves up to the
        lowest kept atom.
        """
        q = self.masses
        low = int(np.searchsorted(np.cumsum(q), mass, side="right"))
        high_tail = np.cumsum(q[::-1])
        high = len(q) - int(np.searchsorted(high_tail, mass, side="right"))
        if low >= high:
            return self

        dropped_low = float(np.sum(q[:low]))
        dropped_high = float(np.sum(q[high:]))
        kept = q[low:high].copy()
        kept[0] += dropped_low
        return PrivacyLossDistribution(
            kept, self.offset + low, self.resolution,
            infinity_mass=self.infinity_mass + dropped_high,
            overflow=self.overflow + dropped_high,
        )

    def truncate(self, window: float) -> "PrivacyLossDistribution":
        """
        Restrict the finite part to [-window, window]

        Mass above the window becomes infinite loss; mass below it is moved
        up to the lowest bin.
        """
        lo = int(np.floor(-window / self.resolution))
        hi = int(np.ceil(window / self.resolution))
        q = self.masses
        n = len(q)
        idx_lo = min(max(lo - self.offset, 0), n)
        idx_hi = max(min(hi - self.offset + 1, n), idx_lo)
        if idx_lo == 0 and idx_hi == n:
            return self

        above = float(np.sum(q[idx_hi:]))
        below = float(np.sum(q[:idx_lo]))
        kept = q[idx_lo:idx_hi].copy()
        if len(kept) == 0:
            return PrivacyLossDistribution(
                np.array([below]), lo, self.resolution,
                infinity_mass=self.infinity_mass + above, overflow=self.overflow + above,
            )
        kept[0] += below
        return PrivacyLossDistribution(
            kept, self.offset + idx_lo, self.resolution,
            infinity_mass=self.infinity_mass + above, overflow=self.overflow + above,
        )

    def compose(self, other: "PrivacyLossDistribution",
                window: Optional[float] = None) -> "PrivacyLossDistribution":
        """Loss distribution of the two mechanisms run independently"""
        if self.resolution != other.resolution:
            raise PrivacyDomainError("cannot compose loss distributions on different grids")
        if len(self.masses) == 1 and len(other.masses) == 1:
            masses = self.masses * other.masses
        else:
            masses = np.maximum(signal.fftconvolve(self.masses, other.masses), 0.0)

        a, b = self.infinity_mass, other.infinity_mass
        pld = PrivacyLossDistribution(
            masses, self.offset + other.offset, self.resolution,
            infinity_mass=a + b - a * b,
            overflow=self.overflow + other.overflow,
        )
        if window is not None:
            pld = pld.truncate(window)
        return pld.trim()

    def self_compose(self, count: int, window: Optional[float] = None) -> "PrivacyLossDistribution":
        """count-fold composition by repeated squaring"""
        result = PrivacyLossDistribution.identity(self.resolution)
        base = self
        n = int(count)
        while n:
            if n & 1:
                result = result.compose(base, window)
            n >>= 1
            if n:
                base = base.compose(base, window)
        return result

    def delta(self, eps):
        """
        delta(eps) = q_inf + sum over losses l > eps of q_l (1 - e^{eps - l})
        """
        e = np.atleast_1d(np.asarray(eps, dtype=float))
        losses = self.losses
        out = np.empty_like(e)
        for i, ei in enumerate(e):
            above = losses > ei
            out[i] = self.infinity_mass + float(
                np.sum(self.masses[above] * -np.expm1(ei - losses[above]))
            )
        out = np.clip(out, 0.0, 1.0)
        if np.ndim(eps) == 0:
            return float(out[0])
        return out

    def epsilon(self, delta: float) -> float:
        """
        Smallest eps >= 0 with delta(eps) <= delta

        Raises:
            UnreachableDeltaError: if the infinite-loss mass alone exceeds delta
        """
        if not 0.0 <= delta <= 1.0:
            raise PrivacyDomainError(f"delta must lie in [0, 1], got {delta}")
        if self.infinity_mass >= delta:
            raise UnreachableDeltaError(
                f"infinite-loss mass {self.infinity_mass:.3e} exceeds delta={delta:g}"
            )
        if self.delta(0.0) <= delta:
            return 0.0
        top = float(self.losses[-1])
        return float(optimize.brentq(lambda e: self.delta(e) - delta, 0.0, top, xtol=1e-12))


def compose_rounds(specs: Sequence[RoundSpec], eps_max: float = 10.0,
                   resolution: float = DEFAULT_RESOLUTION,
                   tail_sigmas: float = DEFAULT_TAIL_SIGMAS,
                   target_delta: float = DEFAULT_TARGET_DELTA) -> PrivacyLossDistribution:
    """
    Compose a heterogeneous sequence of subsampled-Gaussian rounds

    Every distinct spec is discretized once and self-composed count times.
    The finite part is kept within [-R, R], R = eps_max + |mean| + k * sd,
    using the mean and standard deviation of the fully composed loss.

    Raises:
        ResolutionError: if truncation pushed more than 0.1 * target_delta of
            mass to infinity
    """
    per_round = []
    mean_total, var_total = 0.0, 0.0
    for spec in specs:
        if spec.p == 0.0:
            continue
        pld = PrivacyLossDistribution.subsampled_gaussian(spec.p, spec.sigma, resolution, tail_sigmas)
        mean, var = pld.moments()
        mean_total += spec.count * mean
        var_total += spec.count * var
        per_round.append((pld, spec.count))

    result = PrivacyLossDistribution.identity(resolution)
    if not per_round:
        return result

    window = max(eps_max, 0.0) + abs(mean_total) + tail_sigmas * np.sqrt(var_total) + resolution
    for pld, count in per_round:
        result = result.compose(pld.self_compose(count, window), window)

    logger.debug(f"Composed {sum(c for _, c in per_round)} rounds: {len(result.masses)} atoms, "
                 f"window {window:.3f}, overflow {result.overflow:.3e}")
    if result.overflow > 0.1 * target_delta:
        raise ResolutionError(
            f"truncated mass {result.overflow:.3e} exceeds 0.1 * delta = {0.1 * target_delta:.3e}; "
            f"widen the loss window"
        )
    return result


def pld_delta(specs: Sequence[RoundSpec], eps_grid, resolution: float = DEFAULT_RESOLUTION,
              tail_sigmas: float = DEFAULT_TAIL_SIGMAS,
              target_delta: float = DEFAULT_TARGET_DELTA) -> np.ndarray:
    """
    delta(eps) of the composed rounds at every eps in eps_grid

    Args:
        specs: Round specs, composed in any order
        eps_grid: Sorted eps values (>= 0)
        resolution: Loss grid spacing
        tail_sigmas: Loss standard deviations kept beyond the largest eps
        target_delta: Smallest delta the caller cares about
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.size and np.any(eps_grid < 0):
        raise PrivacyDomainError("eps grid must be nonnegative")
    eps_max = float(np.max(eps_grid)) if eps_grid.size else 0.0
    pld = compose_rounds(specs, eps_max, resolution, tail_sigmas, target_delta)
    return pld.delta(eps_grid)
