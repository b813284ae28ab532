"""
src/simulation/data.py
Synthetic two-class Gaussian blobs for desk-scale training runs
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetSpec:
    """
    Two Gaussian blobs with means +/- (separation/2) e_1 and a shared scale

    Attributes:
        d: Feature dimension (a constant bias feature is appended on top)
        N: Training samples for the client
        separation: Distance between the class means
        scale: Standard deviation of every feature around its class mean
        label_flip: Probability that a training label is flipped
        test_size: Held-out samples, never flipped
        seed: Seed of the generator
    """
    d: int = 2
    N: int = 4096
    separation: float = 2.0
    scale: float = 0.25
    label_flip: float = 0.0
    test_size: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("d", f"must be >= 1, got {self.d}")
        if self.N < 1:
            raise ConfigError("N", f"must be >= 1, got {self.N}")
        if not self.scale > 0:
            raise ConfigError("scale", f"must be positive, got {self.scale}")
        if not self.separation >= 0:
            raise ConfigError("separation", f"must be >= 0, got {self.separation}")
        if not 0.0 <= self.label_flip < 0.5:
            raise ConfigError("label_flip", f"must lie in [0, 0.5), got {self.label_flip}")
        if self.test_size < 1:
            raise ConfigError("test_size", f"must be >= 1, got {self.test_size}")


@dataclass(frozen=True, eq=False)
class Dataset:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray

    @property
    def N(self) -> int:
        return len(self.y_train)

    @property
    def dim(self) -> int:
        """Model dimension, bias included"""
        return self.X_train.shape[1]


def _blobs(rng: np.random.Generator, spec: DatasetSpec, n: int):
    y = rng.integers(0, 2, size=n)
    centre = np.zeros(spec.d)
    centre[0] = 0.5 * spec.separation
    X = spec.scale * rng.standard_normal((n, spec.d)) + np.where(y[:, None] == 1, centre, -centre)
    return np.hstack([X, np.ones((n, 1))]), y.astype(float)


def make_blobs(spec: DatasetSpec) -> Dataset:
    """Draw the train and test splits described by spec"""
    rng = np.random.default_rng(spec.seed)
    X_train, y_train = _blobs(rng, spec, spec.N)
    X_test, y_test = _blobs(rng, spec, spec.test_size)

    if spec.label_flip > 0:
        flips = rng.random(spec.N) < spec.label_flip
        y_train = np.where(flips, 1.0 - y_train, y_train)
        logger.debug(f"Flipped {int(flips.sum())} of {spec.N} training labels")

    return Dataset(X_train, y_train, X_test, y_test)
