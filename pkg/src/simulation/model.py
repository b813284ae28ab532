"""
src/simulation/model.py
Logistic regression: per-sample gradients, loss, accuracy and the baseline optimum
"""

import logging

import numpy as np
from scipy import optimize, special

logger = logging.getLogger(__name__)


def grad_logistic(w: np.ndarray, x: np.ndarray, y: float) -> np.ndarray:
    """
    Gradient of the logistic loss at one sample

    The loss is -[y log s + (1 - y) log(1 - s)] with s = logistic(w.x), so the
    gradient is (s - y) x. The bias is a constant feature of x.
    """
    return (special.expit(np.dot(w, x)) - y) * x


def per_sample_gradients(w: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row h is grad_logistic(w, X[h], y[h])"""
    return (special.expit(X @ w) - y)[:, None] * X


def logistic_loss(w: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean logistic loss, computed as log(1 + e^z) - y z without overflow"""
    z = X @ w
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def accuracy(w: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean((X @ w > 0.0) == (y > 0.5)))


def fit_baseline(X: np.ndarray, y: np.ndarray, l2: float = 1e-4) -> np.ndarray:
    """
    Non-private ridge-logistic optimum, used as a reference point w*

    Args:
        X: Features with bias column
        y: Labels in {0, 1}
        l2: Ridge penalty (keeps the optimum finite on separable data)
    """
    def objective(w):
        z = X @ w
        value = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w)
        grad = X.T @ (special.expit(z) - y) / len(y) + l2 * w
        return value, grad

    result = optimize.minimize(objective, np.zeros(X.shape[1]), jac=True, method="L-BFGS-B")
    if not result.success:
        logger.warning(f"Baseline fit did not converge: {result.message}")
    return result.x
