"""
src/tradeoff/curves.py
Trade-off curves: representation, evaluation, inversion and convexification
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import special

from src.tradeoff.grid import DEFAULT_GAUSSIAN_STEP, alpha_grid, gaussian_knots, midpoints
from src.tradeoff.normal import gaussian_delta
from src.utils.errors import InvalidCurveError, PrivacyDomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Slack for float round-off when checking the trade-off axioms
AXIOM_TOLERANCE = 1e-12


class CurveKind(str, Enum):
    PERFECT = "perfect"
    GAUSSIAN = "gaussian"
    EPS_DELTA = "eps_delta"
    PIECEWISE = "piecewise_linear"


@dataclass(frozen=True)
class Violation:
    """One failed trade-off axiom"""
    axiom: str
    knot: Optional[int]
    detail: str

    def __str__(self):
        where = f" at knot {self.knot}" if self.knot is not None else ""
        return f"{self.axiom}{where}: {self.detail}"


@dataclass(frozen=True, eq=False)
class TradeoffCurve:
    """
    A trade-off function f: [0,1] -> [0,1]

    Analytic variants (perfect, Gaussian, eps-delta) are evaluated in closed
    form. Piecewise-linear curves hold their knots in read-only arrays and are
    marked grid-approximate when they came from discretizing something else.
    """
    kind: CurveKind
    mu: float = 0.0
    eps: float = 0.0
    delta: float = 0.0
    alphas: Optional[np.ndarray] = None
    betas: Optional[np.ndarray] = None
    grid_approximate: bool = False

    @classmethod
    def perfect(cls) -> "TradeoffCurve":
        return cls(CurveKind.PERFECT)

    @classmethod
    def gaussian(cls, mu: float) -> "TradeoffCurve":
        if not np.isfinite(mu) or mu < 0:
            raise PrivacyDomainError(f"Gaussian curve needs mu >= 0, got {mu}")
        return cls(CurveKind.GAUSSIAN, mu=float(mu))

    @classmethod
    def eps_delta(cls, eps: float, delta: float) -> "TradeoffCurve":
        if not np.isfinite(eps) or eps < 0:
            raise PrivacyDomainError(f"eps must be a finite value >= 0, got {eps}")
        if not 0.0 <= delta <= 1.0:
            raise PrivacyDomainError(f"delta must lie in [0, 1], got {delta}")
        return cls(CurveKind.EPS_DELTA, eps=float(eps), delta=float(delta))

    @classmethod
    def piecewise(cls, alphas, betas, check: bool = True,
                  grid_approximate: bool = False) -> "TradeoffCurve":
        """
        Build a piecewise-linear curve from its knots

        Args:
            alphas: Knot positions, strictly increasing from 0 to 1
            betas: Knot values
            check: Raise InvalidCurveError when an axiom fails
            grid_approximate: Mark the curve as a discretized approximation
        """
        a = np.array(alphas, dtype=float)
        b = np.array(betas, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise PrivacyDomainError("alphas and betas must be 1-D arrays of equal length")
        if check:
            # knots are validated as given; only round-off inside the tolerance is clipped
            violations = validate(cls(CurveKind.PIECEWISE, alphas=a, betas=b))
            if violations:
                raise InvalidCurveError(violations)
            b = np.clip(b, 0.0, 1.0)
        a.setflags(write=False)
        b.setflags(write=False)
        return cls(CurveKind.PIECEWISE, alphas=a, betas=b, grid_approximate=grid_approximate)

    @property
    def is_analytic(self) -> bool:
        return self.kind != CurveKind.PIECEWISE

    def params(self) -> dict:
        if self.kind == CurveKind.GAUSSIAN:
            return {"mu": self.mu}
        if self.kind == CurveKind.EPS_DELTA:
            return {"eps": self.eps, "delta": self.delta}
        if self.kind == CurveKind.PIECEWISE:
            return {"knots": len(self.alphas)}
        return {}

    def __call__(self, alpha: ArrayLike) -> ArrayLike:
        return evaluate(self, alpha)

    def __repr__(self):
        return f"TradeoffCurve({self.kind.value}, {self.params()})"


def evaluate(f: TradeoffCurve, alpha: ArrayLike) -> ArrayLike:
    """
    Evaluate f at one or many type I errors

    Args:
        f: Trade-off curve
        alpha: Scalar or array with values in [0, 1]

    Returns:
        f(alpha), same shape as alpha

    Raises:
        PrivacyDomainError: if any alpha lies outside [0, 1]
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(~((a >= 0.0) & (a <= 1.0))):
        raise PrivacyDomainError(f"alpha must lie in [0, 1], got {alpha}")

    if f.kind == CurveKind.PERFECT:
        out = 1.0 - a
    elif f.kind == CurveKind.GAUSSIAN:
        # G_mu(a) = Phi(Phi^{-1}(1 - a) - mu), written with Phi^{-1}(a) so
        # small alphas keep their precision; ndtri maps 0 and 1 to -inf/+inf.
        with np.errstate(over="ignore", invalid="ignore"):
            out = special.ndtr(-special.ndtri(a) - f.mu)
    elif f.kind == CurveKind.EPS_DELTA:
        e = np.exp(f.eps)
        out = np.maximum.reduce([
            np.zeros_like(a),
            1.0 - f.delta - e * a,
            (1.0 - f.delta - a) / e,
        ])
    else:
        out = np.interp(a, f.alphas, f.betas)

    if np.ndim(alpha) == 0:
        return float(out)
    return out


def lower_convex_hull(xs: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lower convex envelope of points sorted by x (monotone chain)

    Collinear interior points are dropped.
    """
    hull_x: List[float] = []
    hull_y: List[float] = []
    for x, y in zip(xs.tolist(), ys.tolist()):
        while len(hull_x) >= 2:
            ox, oy = hull_x[-2], hull_y[-2]
            ax, ay = hull_x[-1], hull_y[-1]
            # pop the middle point unless it turns counter-clockwise
            if (ax - ox) * (y - oy) - (ay - oy) * (x - ox) <= 0.0:
                hull_x.pop()
                hull_y.pop()
            else:
                break
        hull_x.append(x)
        hull_y.append(y)
    return np.array(hull_x), np.array(hull_y)


def discretize(f: TradeoffCurve, step: float = DEFAULT_GAUSSIAN_STEP,
               reach: Optional[float] = None) -> TradeoffCurve:
    """
    Piecewise-linear version of f for operator algebra

    Perfect and eps-delta curves are represented exactly by their kinks.
    Gaussian curves get quantile-spaced knots (see grid.gaussian_knots) and are
    flagged grid-approximate.

    Args:
        f: Curve to discretize
        step: Quantile spacing for Gaussian knots
        reach: Largest Gaussian parameter the knots must later resolve
    """
    if f.kind == CurveKind.PIECEWISE:
        return f
    if f.kind == CurveKind.PERFECT:
        return TradeoffCurve.piecewise([0.0, 1.0], [1.0, 0.0])
    if f.kind == CurveKind.EPS_DELTA:
        kink = (1.0 - f.delta) / (1.0 + np.exp(f.eps))
        alphas = np.unique([0.0, kink, 1.0 - f.delta, 1.0])
        return TradeoffCurve.piecewise(alphas, evaluate(f, alphas))

    alphas = gaussian_knots(f.mu, step=step, reach=reach)
    logger.debug(f"Discretized G_{f.mu:g} on {len(alphas)} knots")
    return TradeoffCurve.piecewise(alphas, evaluate(f, alphas), grid_approximate=True)


def inverse(f: TradeoffCurve) -> TradeoffCurve:
    """
    Generalized inverse f^{-1}(a) = inf{t in [0,1] : f(t) <= a}

    Every analytic variant is symmetric and is returned unchanged. For
    piecewise-linear curves the knots are mirrored; where f is flat the
    infimum picks the leftmost t.
    """
    if f.is_analytic:
        return f

    a, b = f.alphas, f.betas
    order = np.lexsort((a, b))  # by beta, then alpha
    new_alpha, new_beta = b[order], a[order]
    first = np.ones(len(new_alpha), dtype=bool)
    first[1:] = new_alpha[1:] != new_alpha[:-1]
    new_alpha, new_beta = new_alpha[first], new_beta[first]

    if new_alpha[0] > 0.0:
        # f never reaches 0: the infimum of the empty set is clamped to 1
        new_alpha = np.concatenate([[0.0], new_alpha])
        new_beta = np.concatenate([[1.0], new_beta])
    if new_alpha[-1] < 1.0:
        new_alpha = np.concatenate([new_alpha, [1.0]])
        new_beta = np.concatenate([new_beta, [0.0]])

    return TradeoffCurve.piecewise(new_alpha, new_beta, grid_approximate=f.grid_approximate)


def symmetrize(f: TradeoffCurve) -> TradeoffCurve:
    """
    Greatest convex minorant of min{f, f^{-1}}

    The minimum of two piecewise-linear functions only adds concave kinks at
    crossings, so the lower hull of the merged knots is the exact biconjugate.
    """
    if f.is_analytic:
        return f

    inv = inverse(f)
    xs = np.union1d(f.alphas, inv.alphas)
    ys = np.minimum(evaluate(f, xs), evaluate(inv, xs))
    hx, hy = lower_convex_hull(xs, ys)
    return TradeoffCurve.piecewise(hx, hy, grid_approximate=f.grid_approximate)


def mix_with_identity(f: TradeoffCurve, p: float) -> TradeoffCurve:
    """
    One-sided subsampled curve f_p = p*f + (1-p)*(1-alpha)

    Raises:
        PrivacyDomainError: if p is outside [0, 1]
    """
    if not 0.0 <= p <= 1.0:
        raise PrivacyDomainError(f"sampling rate must lie in [0, 1], got {p}")
    if p == 0.0 or f.kind == CurveKind.PERFECT:
        return TradeoffCurve.perfect()

    fd = discretize(f)
    betas = p * fd.betas + (1.0 - p) * (1.0 - fd.alphas)
    return TradeoffCurve.piecewise(fd.alphas, betas, grid_approximate=fd.grid_approximate)


def validate(f: TradeoffCurve, tol: float = AXIOM_TOLERANCE) -> List[Violation]:
    """
    Check the trade-off function axioms

    Returns:
        Empty list when f is a valid trade-off function, otherwise one
        Violation per failed axiom and offending knot
    """
    if f.kind == CurveKind.PERFECT:
        return []
    if f.kind == CurveKind.GAUSSIAN:
        if not np.isfinite(f.mu) or f.mu < 0:
            return [Violation("parameter", None, f"mu={f.mu} must be >= 0")]
        return []
    if f.kind == CurveKind.EPS_DELTA:
        found = []
        if not np.isfinite(f.eps) or f.eps < 0:
            found.append(Violation("parameter", None, f"eps={f.eps} must be >= 0"))
        if not 0.0 <= f.delta <= 1.0:
            found.append(Violation("parameter", None, f"delta={f.delta} must lie in [0, 1]"))
        return found

    a, b = f.alphas, f.betas
    found: List[Violation] = []
    if a is None or len(a) < 2:
        return [Violation("knots", None, "need at least two knots")]

    if a[0] != 0.0:
        found.append(Violation("endpoints", 0, f"first alpha is {a[0]}, expected 0"))
    if a[-1] != 1.0:
        found.append(Violation("endpoints", len(a) - 1, f"last alpha is {a[-1]}, expected 1"))

    for i in np.flatnonzero(np.diff(a) <= 0.0) + 1:
        found.append(Violation("ordering", int(i), f"alpha {a[i]} does not exceed {a[i - 1]}"))

    for i in np.flatnonzero((b < -tol) | (b > 1.0 + tol)):
        found.append(Violation("range", int(i), f"beta {b[i]} outside [0, 1]"))

    for i in np.flatnonzero(np.diff(b) > tol) + 1:
        found.append(Violation("monotone", int(i), f"beta rises from {b[i - 1]} to {b[i]}"))

    for i in np.flatnonzero(b > 1.0 - a + tol):
        found.append(Violation("upper_bound", int(i), f"beta {b[i]} exceeds 1 - alpha = {1.0 - a[i]}"))

    if len(a) >= 3 and np.all(np.diff(a) > 0.0):
        w = (a[1:-1] - a[:-2]) / (a[2:] - a[:-2])
        chord = b[:-2] + w * (b[2:] - b[:-2])
        for i in np.flatnonzero(b[1:-1] > chord + tol) + 1:
            found.append(Violation("convexity", int(i), f"beta {b[i]} lies above the chord of its neighbours"))

    return found


def sup_distance(f: TradeoffCurve, g: TradeoffCurve, grid: Optional[np.ndarray] = None) -> float:
    """
    Largest |f(alpha) - g(alpha)| over a check grid

    The default grid is the standard alpha grid plus every knot of either
    curve and the midpoints between knots, where chord error peaks.
    """
    if grid is None:
        pieces = [alpha_grid()]
        for c in (f, g):
            if not c.is_analytic:
                pieces.extend([c.alphas, midpoints(c.alphas)])
        grid = np.unique(np.concatenate(pieces))
    return float(np.max(np.abs(evaluate(f, grid) - evaluate(g, grid))))


def curve_delta(f: TradeoffCurve, eps: ArrayLike) -> ArrayLike:
    """
    Tightest delta such that f is (eps, delta)-DP

    delta(eps) = max over alpha of max{1 - e^eps*alpha - f(alpha),
    1 - alpha - e^eps*f(alpha)}, floored at 0. Both terms are concave in alpha
    for a convex f, so for piecewise-linear curves the maximum sits on a knot.

    Args:
        f: Trade-off curve
        eps: Scalar or array of eps values

    Returns:
        delta values, same shape as eps
    """
    e = np.atleast_1d(np.asarray(eps, dtype=float))

    if f.kind == CurveKind.PERFECT:
        out = np.zeros_like(e)
    elif f.kind == CurveKind.GAUSSIAN:
        out = np.atleast_1d(gaussian_delta(f.mu, e))
    else:
        fd = discretize(f)
        a, b = fd.alphas, fd.betas
        out = np.empty_like(e)
        for i, ei in enumerate(e):
            w = np.exp(ei)
            out[i] = max(0.0, float(np.max(1.0 - w * a - b)), float(np.max(1.0 - a - w * b)))

    if np.ndim(eps) == 0:
        return float(out[0])
    return out


def profile_to_curve(eps, delta, grid: Optional[np.ndarray] = None) -> TradeoffCurve:
    """
    Trade-off curve implied by a privacy profile

    Returns the envelope max_i f_{eps_i, delta_i} as a piecewise-linear curve.
    The envelope is a valid lower bound on any curve with that profile.

    Args:
        eps: eps values of the profile
        delta: Matching delta values
        grid: Alpha grid to evaluate on (defaults to the standard grid plus
            every kink of the individual eps-delta curves)
    """
    eps = np.asarray(eps, dtype=float)
    delta = np.clip(np.asarray(delta, dtype=float), 0.0, 1.0)
    if eps.shape != delta.shape:
        raise PrivacyDomainError("eps and delta arrays must have equal length")

    if grid is None:
        kinks = np.concatenate([(1.0 - delta) / (1.0 + np.exp(eps)), 1.0 - delta])
        grid = np.unique(np.concatenate([alpha_grid(), np.clip(kinks, 0.0, 1.0)]))

    beta = np.zeros_like(grid)
    for ei, di in zip(eps, delta):
        piece = TradeoffCurve.eps_delta(max(float(ei), 0.0), float(di))
        beta = np.maximum(beta, evaluate(piece, grid))
    return TradeoffCurve.piecewise(grid, beta, grid_approximate=True)
