"""
src/simulation/dp_sgd.py
One DP-SGD round on a client: sampling, per-sample clipping and Gaussian noise
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from src.simulation.model import grad_logistic, per_sample_gradients
from src.utils.errors import ConfigError, PrivacyDomainError

logger = logging.getLogger(__name__)


class SamplingMode(str, Enum):
    FIXED = "fixed"
    POISSON = "poisson"

    @property
    def sensitivity_factor(self) -> float:
        """Replace-one neighbours move U by up to 2C, add/remove-one by C"""
        return 2.0 if self == SamplingMode.FIXED else 1.0


@dataclass(frozen=True)
class ClipSchedule:
    """
    Per-round clipping constants C_b

    kind is "constant" (values[0], or no clipping when values is empty),
    "linear" (values[0] to values[1] over the run) or "list" (values[b],
    cycled every epoch).
    """
    kind: str = "constant"
    values: Tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "list"):
            raise ConfigError("kind", f"unknown clip schedule '{self.kind}'")
        if self.kind == "linear" and len(self.values) != 2:
            raise ConfigError("values", "linear schedule needs [start, end]")
        if self.kind == "list" and not self.values:
            raise ConfigError("values", "list schedule needs at least one value")
        if any(not v > 0 for v in self.values):
            raise ConfigError("values", f"clipping constants must be positive, got {list(self.values)}")

    @classmethod
    def disabled(cls) -> "ClipSchedule":
        return cls("constant", ())

    @property
    def enabled(self) -> bool:
        return bool(self.values) and np.isfinite(max(self.values))

    def value(self, b: int, round_index: int, total_rounds: int) -> Optional[float]:
        """
        C for round b of its epoch, round_index overall; None when disabled
        """
        if not self.enabled:
            return None
        if self.kind == "constant":
            return float(self.values[0])
        if self.kind == "linear":
            frac = round_index / max(total_rounds - 1, 1)
            return float(self.values[0] + frac * (self.values[1] - self.values[0]))
        return float(self.values[b % len(self.values)])


@dataclass(frozen=True, eq=False)
class RoundUpdate:
    """
    What a client transmits after one round, plus diagnostics kept locally

    u_bar_over_m is the noised sum divided by the nominal batch size; u_sum is
    the clean clipped sum, logged apart so the noise can be attributed.
    """
    u_bar_over_m: np.ndarray
    b: int
    e: int
    client_id: int
    u_sum: np.ndarray
    batch_size: int
    clip: Optional[float]
    clipped_norm_max: float
    grad_norm_mean: float


def clip(x: np.ndarray, C: Optional[float]) -> np.ndarray:
    """
    [x]_C = x / max{1, ||x|| / C}; C of None or inf leaves x unchanged

    Raises:
        PrivacyDomainError: if C <= 0
    """
    if C is None or np.isinf(C):
        return x
    if not C > 0:
        raise PrivacyDomainError(f"clipping constant must be positive, got {C}")
    return x / max(1.0, float(np.linalg.norm(x)) / C)


def clip_rows(G: np.ndarray, C: Optional[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Clip every row of G; returns the clipped rows and the raw row norms"""
    norms = np.linalg.norm(G, axis=1)
    if C is None or np.isinf(C):
        return G, norms
    if not C > 0:
        raise PrivacyDomainError(f"clipping constant must be positive, got {C}")
    return G / np.maximum(1.0, norms / C)[:, None], norms


def sample(N: int, m: int, mode: SamplingMode, rng: np.random.Generator) -> np.ndarray:
    """
    Draw one mini-batch

    fixed: exactly m distinct indices, uniform without replacement.
    poisson: every index independently with probability m/N (may be empty).
    """
    if not 1 <= m <= N:
        raise PrivacyDomainError(f"need 1 <= m <= N, got m={m}, N={N}")
    mode = SamplingMode(mode)
    if mode == SamplingMode.FIXED:
        return np.sort(rng.choice(N, size=m, replace=False))
    return np.flatnonzero(rng.random(N) < m / N)


def noise_std(C: Optional[float], sigma: float, mode: SamplingMode) -> float:
    """kappa * C * sigma with kappa = 2 (fixed) or 1 (poisson)"""
    if sigma == 0:
        return 0.0
    if C is None or np.isinf(C):
        raise PrivacyDomainError("noise needs a finite clipping constant")
    return SamplingMode(mode).sensitivity_factor * C * sigma


def arsinh_shape(noise: np.ndarray, a: float) -> np.ndarray:
    """
    a * arsinh(noise / a), elementwise

    Odd, monotone and never larger in magnitude than its input. Noise shaped
    this way is not covered by the accountant.
    """
    if not a > 0:
        raise PrivacyDomainError(f"shaping parameter must be positive, got {a}")
    return a * np.arcsinh(np.asarray(noise, dtype=float) / a)


def local_round(w: np.ndarray, X: np.ndarray, y: np.ndarray, C: Optional[float], sigma: float,
                mode: SamplingMode, rng: np.random.Generator, m: int,
                b: int = 0, e: int = 0, client_id: int = 0,
                isr: Optional[Callable[[int], Optional[np.ndarray]]] = None,
                shaping: Optional[float] = None) -> Tuple[RoundUpdate, np.ndarray]:
    """
    Compute one noised round update on an already sampled batch

    U = sum_h [grad f(w; xi_h)]_C and U_bar = U + N(0, (kappa C sigma)^2 I).

    Args:
        w: Model at the start of the round
        X, y: The sampled batch
        C: Clipping constant (None disables clipping; only allowed with sigma = 0)
        sigma: Noise multiplier
        mode: Sampling mode, sets kappa
        rng: Noise stream
        m: Nominal batch size used to scale U_bar
        b, e, client_id: Round, epoch and client recorded in the update
        isr: Called with the index of every gradient before it is computed;
            a returned model replaces w from that gradient on
        shaping: arsinh shaping parameter for the noise, None for plain noise

    Returns:
        (update, w) where w is the model current at the end of the round
    """
    d = len(w)
    if isr is None and len(y):
        grads = per_sample_gradients(w, X, y)
    else:
        rows = []
        for h in range(len(y)):
            replacement = isr(h) if isr is not None else None
            if replacement is not None:
                w = replacement
            rows.append(grad_logistic(w, X[h], y[h]))
        grads = np.array(rows).reshape(len(y), d)

    clipped, norms = clip_rows(grads, C)
    u_sum = clipped.sum(axis=0) if len(y) else np.zeros(d)

    std = noise_std(C, sigma, mode)
    if std > 0:
        noise = rng.normal(0.0, std, size=d)
        if shaping is not None:
            noise = arsinh_shape(noise, shaping)
        u_bar = u_sum + noise
    else:
        u_bar = u_sum.copy()

    clipped_norms = np.linalg.norm(clipped, axis=1) if len(y) else np.zeros(0)
    update = RoundUpdate(
        u_bar_over_m=u_bar / m,
        b=b, e=e, client_id=client_id,
        u_sum=u_sum,
        batch_size=len(y),
        clip=C,
        clipped_norm_max=float(clipped_norms.max()) if len(y) else 0.0,
        grad_norm_mean=float(norms.mean()) if len(y) else 0.0,
    )
    return update, w


def clipped_sum(w: np.ndarray, X: np.ndarray, y: np.ndarray, C: Optional[float]) -> np.ndarray:
    if len(y) == 0:
        return np.zeros(len(w))
    clipped, _ = clip_rows(per_sample_gradients(w, X, y), C)
    return clipped.sum(axis=0)


def neighbor_sensitivity(batch: Tuple[np.ndarray, np.ndarray], neighbor: Tuple[np.ndarray, np.ndarray],
                         w: np.ndarray, C: float, mode: SamplingMode) -> float:
    """
    ||U - U'|| for two neighbouring batches

    fixed mode expects replace-one neighbours (equal sizes), poisson mode
    add/remove-one neighbours (sizes differ by one). The result is at most 2C
    and C respectively.
    """
    mode = SamplingMode(mode)
    size_a, size_b = len(batch[1]), len(neighbor[1])
    if mode == SamplingMode.FIXED and size_a != size_b:
        raise PrivacyDomainError("replace-one neighbours must have equal batch sizes")
    if mode == SamplingMode.POISSON and abs(size_a - size_b) != 1:
        raise PrivacyDomainError("add/remove-one neighbours must differ by one sample")

    diff = clipped_sum(w, *batch, C) - clipped_sum(w, *neighbor, C)
    return float(np.linalg.norm(diff))


def gradient_check(w: np.ndarray, x: np.ndarray, y: float, step: float = 1e-5) -> float:
    """Relative error of grad_logistic against central finite differences"""
    def loss(v):
        z = float(np.dot(v, x))
        return float(np.logaddexp(0.0, z) - y * z)

    numeric = np.empty_like(w)
    for i in range(len(w)):
        e_i = np.zeros_like(w)
        e_i[i] = step
        numeric[i] = (loss(w + e_i) - loss(w - e_i)) / (2.0 * step)
    analytic = grad_logistic(w, x, y)
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def batch_of(X: np.ndarray, y: np.ndarray, idx: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.asarray(idx, dtype=int)
    return X[idx], y[idx]
