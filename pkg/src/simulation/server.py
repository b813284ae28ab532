"""
src/simulation/server.py
Central server: step-size schedules, windowed aggregation and broadcasts
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.simulation.dp_sgd import RoundUpdate
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

STEP_RULES = ("constant", "inverse_power", "plateau_decay")


@dataclass(frozen=True)
class StepSchedule:
    """
    Server step-size rule

    constant: eta0 forever. inverse_power: eta0 / (1 + t)^gamma at tick t.
    plateau_decay: eta *= factor once public test accuracy has not improved
    for `patience` evaluations.
    """
    rule: str = "plateau_decay"
    eta0: float = 0.5
    gamma: float = 0.5
    factor: float = 0.9
    patience: int = 1

    def __post_init__(self):
        if self.rule not in STEP_RULES:
            raise ConfigError("rule", f"unknown step rule '{self.rule}', expected one of {STEP_RULES}")
        if not self.eta0 > 0:
            raise ConfigError("eta0", f"must be positive, got {self.eta0}")
        if not 0.0 < self.factor <= 1.0:
            raise ConfigError("factor", f"must lie in (0, 1], got {self.factor}")
        if self.gamma < 0:
            raise ConfigError("gamma", f"must be >= 0, got {self.gamma}")
        if self.patience < 1:
            raise ConfigError("patience", f"must be >= 1, got {self.patience}")


@dataclass(frozen=True)
class ServerConfig:
    """
    Aggregation and asynchrony policy

    Attributes:
        step_schedule: Step-size rule, broadcast to clients with the model
        window_length: Ticks per aggregation window
        broadcast_period: Ticks between broadcasts
        drop_prob: Probability that a broadcast to one client is lost
        client_weights: Aggregation weights, normalized; None means uniform
        eval_period: Ticks between public test evaluations (None: one epoch
            of the first client)
    """
    step_schedule: StepSchedule = StepSchedule()
    window_length: int = 1
    broadcast_period: int = 1
    drop_prob: float = 0.0
    client_weights: Optional[Tuple[float, ...]] = None
    eval_period: Optional[int] = None

    def __post_init__(self):
        if self.window_length < 1:
            raise ConfigError("window_length", f"must be >= 1, got {self.window_length}")
        if self.broadcast_period < 1:
            raise ConfigError("broadcast_period", f"must be >= 1, got {self.broadcast_period}")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ConfigError("drop_prob", f"must lie in [0, 1], got {self.drop_prob}")
        if self.eval_period is not None and self.eval_period < 1:
            raise ConfigError("eval_period", f"must be >= 1, got {self.eval_period}")
        if self.client_weights is not None:
            weights = np.asarray(self.client_weights, dtype=float)
            if np.any(weights < 0):
                raise ConfigError("client_weights", "weights must be nonnegative")
            if abs(weights.sum() - 1.0) > 1e-9:
                raise ConfigError("client_weights", f"weights must sum to 1, got {weights.sum()}")

    def weights(self, n_clients: int) -> np.ndarray:
        if self.client_weights is None:
            return np.full(n_clients, 1.0 / n_clients)
        if len(self.client_weights) != n_clients:
            raise ConfigError("client_weights", f"expected {n_clients} weights, got {len(self.client_weights)}")
        return np.asarray(self.client_weights, dtype=float)


def server_apply(w_hat: np.ndarray, updates: Sequence[RoundUpdate], eta: float,
                 weights: Sequence[float]) -> np.ndarray:
    """
    w_hat - eta * sum_i weight_i * (U_bar / m)_i

    Args:
        w_hat: Current global model
        updates: Round updates received in the window
        eta: Server step size
        weights: One weight per update (the weight of its sender)
    """
    total = np.zeros_like(w_hat)
    for update, weight in zip(updates, weights):
        total = total + weight * update.u_bar_over_m
    return w_hat - eta * total


class StepController:
    """Tracks the current step size of a StepSchedule"""

    def __init__(self, schedule: StepSchedule):
        self.schedule = schedule
        self.eta = schedule.eta0
        self.best_accuracy = -np.inf
        self.bad_evaluations = 0

    def advance(self, tick: int):
        if self.schedule.rule == "inverse_power":
            self.eta = self.schedule.eta0 / (1.0 + tick) ** self.schedule.gamma

    def observe(self, test_accuracy: float):
        """Plateau rule: decay after `patience` evaluations without improvement"""
        if self.schedule.rule != "plateau_decay":
            return
        if test_accuracy > self.best_accuracy:
            self.best_accuracy = test_accuracy
            self.bad_evaluations = 0
            return
        self.bad_evaluations += 1
        if self.bad_evaluations >= self.schedule.patience:
            self.eta *= self.schedule.factor
            self.bad_evaluations = 0
            logger.debug(f"Step size decayed to {self.eta:g}")


@dataclass(frozen=True, eq=False)
class Broadcast:
    model: np.ndarray
    eta: float
    tick: int


class Server:
    """Aggregates round updates per window and broadcasts the global model"""

    def __init__(self, config: ServerConfig, w0: np.ndarray, n_clients: int,
                 drop_rngs: List[np.random.Generator]):
        self.config = config
        self.w_hat = w0.copy()
        self.weights = config.weights(n_clients)
        self.step = StepController(config.step_schedule)
        self.drop_rngs = drop_rngs
        self.pending: List[RoundUpdate] = []
        self.history: List[Tuple[int, float, float]] = []
        self.dropped = 0

    def receive(self, update: RoundUpdate):
        self.pending.append(update)

    def end_tick(self, tick: int) -> bool:
        """Aggregate when the window closes; returns True if the model moved"""
        if (tick + 1) % self.config.window_length != 0 or not self.pending:
            return False
        weights = [self.weights[u.client_id] for u in self.pending]
        self.w_hat = server_apply(self.w_hat, self.pending, self.step.eta, weights)
        self.pending = []
        return True

    def evaluate(self, tick: int, test_accuracy: float):
        self.step.observe(test_accuracy)
        self.history.append((tick, test_accuracy, self.step.eta))

    def broadcast(self, tick: int) -> List[Optional[Broadcast]]:
        """
        One message per client, None where the message was dropped

        The step size advances before broadcasting, so clients and server
        use the same eta for the next tick.
        """
        self.step.advance(tick + 1)
        if (tick + 1) % self.config.broadcast_period != 0:
            return [None] * len(self.drop_rngs)

        messages = []
        for rng in self.drop_rngs:
            lost = self.config.drop_prob > 0 and rng.random() < self.config.drop_prob
            if lost:
                self.dropped += 1
                messages.append(None)
            else:
                messages.append(Broadcast(self.w_hat.copy(), self.step.eta, tick + 1))
        return messages
