"""
src/simulation/simulator.py
Deterministic logical-clock simulation of federated DP-SGD
"""

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.accounting.composition import round_count
from src.accounting.ledger import AccountLedger
from src.accounting.pld import RoundSpec
from src.simulation.data import Dataset, DatasetSpec, make_blobs
from src.simulation.dp_sgd import ClipSchedule, RoundUpdate, SamplingMode, batch_of, local_round, sample
from src.simulation.model import accuracy, fit_baseline, logistic_loss
from src.simulation.server import Broadcast, Server, ServerConfig
from src.utils.errors import ConfigError, DivergenceError, SimulationStalledError

logger = logging.getLogger(__name__)

METRICS_HEADER = "epoch,client,train_acc,test_acc,train_loss,grad_norm_mean,rounds,gradients"

# spawn-key purposes of the per-client random streams
SAMPLING, NOISE, LATENCY, DROPS = 0, 1, 2, 3
ISR_MODES = ("immediate", "round_boundary")


def stream(seed: int, client_id: int, purpose: int) -> np.random.Generator:
    """Independent generator for one (client, purpose) pair of a run"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(client_id, purpose)))


@dataclass(frozen=True)
class ClientConfig:
    """
    DP-SGD hyperparameters of one client

    Attributes:
        N: Local data set size
        m: Batch size
        E: Epochs; a fractional count ends with a partial epoch
        clip: Clipping schedule
        sigma: Noise multiplier (0 disables noise)
        sampling_mode: fixed or poisson
        staleness_bound: Rounds a client may run ahead of its last global
            model before waiting (None: never wait)
        isr_mode: immediate (overwrite mid-round) or round_boundary
        shaping: arsinh shaping parameter; makes the run unaccounted
    """
    N: int
    m: int
    E: float
    clip: ClipSchedule = ClipSchedule()
    sigma: float = 0.0
    sampling_mode: SamplingMode = SamplingMode.FIXED
    staleness_bound: Optional[int] = None
    isr_mode: str = "immediate"
    shaping: Optional[float] = None

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("N", f"must be >= 1, got {self.N}")
        if not 1 <= self.m <= self.N:
            raise ConfigError("m", f"must lie in [1, N={self.N}], got {self.m}")
        if not self.E > 0:
            raise ConfigError("E", f"must be positive, got {self.E}")
        if not self.sigma >= 0:
            raise ConfigError("sigma", f"must be >= 0, got {self.sigma}")
        if self.sigma > 0 and not self.clip.enabled:
            raise ConfigError("clip", "noise needs clipping; set a clipping constant")
        if self.isr_mode not in ISR_MODES:
            raise ConfigError("isr_mode", f"expected one of {ISR_MODES}, got '{self.isr_mode}'")
        if self.staleness_bound is not None and self.staleness_bound < 0:
            raise ConfigError("staleness_bound", f"must be >= 0, got {self.staleness_bound}")
        if self.shaping is not None and not self.shaping > 0:
            raise ConfigError("shaping", f"must be positive, got {self.shaping}")

    @property
    def rounds_per_epoch(self) -> int:
        return max(1, math.ceil(self.N / self.m))

    @property
    def total_rounds(self) -> int:
        return round_count(self.N, self.m, self.E)

    @property
    def sampling_rate(self) -> float:
        return self.m / self.N


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    client: int
    train_acc: float
    test_acc: float
    train_loss: float
    grad_norm_mean: float
    rounds: int
    gradients: int

    def row(self) -> str:
        return (f"{self.epoch},{self.client},{self.train_acc!r},{self.test_acc!r},"
                f"{self.train_loss!r},{self.grad_norm_mean!r},{self.rounds},{self.gradients}")


@dataclass
class Metrics:
    records: List[EpochRecord] = field(default_factory=list)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        buffer.write(METRICS_HEADER + "\n")
        for record in self.records:
            buffer.write(record.row() + "\n")
        return buffer.getvalue()

    def for_client(self, client: int) -> List[EpochRecord]:
        return [r for r in self.records if r.client == client]

    def final(self, client: int) -> EpochRecord:
        return self.for_client(client)[-1]


@dataclass
class SimulationResult:
    metrics: Metrics
    ledgers: Dict[int, Optional[AccountLedger]]
    server_model: np.ndarray
    client_models: Dict[int, np.ndarray]
    server_history: list
    baseline_distance: Dict[int, float]
    unaccounted: Dict[int, bool]
    updates: Dict[int, List[RoundUpdate]]
    ticks: int


class Client:
    """One simulated client running noisy local rounds on its own data"""

    def __init__(self, client_id: int, config: ClientConfig, data: Dataset, w0: np.ndarray,
                 seed: int, eta: float, target_delta: float, record_updates: bool):
        self.client_id = client_id
        self.config = config
        self.data = data
        self.w = w0.copy()
        self.eta = eta
        self.sampling_rng = stream(seed, client_id, SAMPLING)
        self.noise_rng = stream(seed, client_id, NOISE)
        self.latency_rng = stream(seed, client_id, LATENCY)

        self.round_index = 0
        self.last_global_tick = 0
        self.pending: Optional[Broadcast] = None
        self.pending_latency = 0.0
        self.epoch_grad_norms: List[float] = []
        self.updates: List[RoundUpdate] = []
        self.record_updates = record_updates
        self.ledger = AccountLedger(target_delta=target_delta) if config.sigma > 0 else None

    @property
    def finished(self) -> bool:
        return self.round_index >= self.config.total_rounds

    def deliver(self, message: Broadcast):
        self.pending = message
        self.pending_latency = float(self.latency_rng.random())

    def _apply_pending(self) -> Optional[np.ndarray]:
        message, self.pending = self.pending, None
        self.eta = message.eta
        self.last_global_tick = message.tick
        self.w = message.model.copy()
        return self.w

    def is_stale(self, tick: int) -> bool:
        bound = self.config.staleness_bound
        return bound is not None and tick - self.last_global_tick > bound

    def step(self, tick: int) -> Optional[RoundUpdate]:
        """Run one round unless the client must wait; returns the update sent"""
        if self.is_stale(tick):
            if self.pending is None:
                return None
            self._apply_pending()
            if self.is_stale(tick):
                return None

        cfg = self.config
        if self.pending is not None and cfg.isr_mode == "round_boundary":
            self._apply_pending()

        b = self.round_index % cfg.rounds_per_epoch
        e = self.round_index // cfg.rounds_per_epoch
        idx = sample(cfg.N, cfg.m, cfg.sampling_mode, self.sampling_rng)
        X, y = batch_of(self.data.X_train, self.data.y_train, idx)
        C = cfg.clip.value(b, self.round_index, cfg.total_rounds)

        switch_at = int(self.pending_latency * len(y))

        def isr(h):
            if h == switch_at and self.pending is not None:
                return self._apply_pending()
            return None

        update, w = local_round(self.w, X, y, C, cfg.sigma, cfg.sampling_mode, self.noise_rng, cfg.m,
                                b=b, e=e, client_id=self.client_id, isr=isr, shaping=cfg.shaping)
        self.w = w
        if self.pending is not None:
            # empty poisson batch: the broadcast still lands before the update
            self._apply_pending()

        self.w = self.w - self.eta * update.u_bar_over_m
        if not np.all(np.isfinite(self.w)):
            raise DivergenceError(
                f"client {self.client_id} epoch {e} round {b}: model is no longer finite"
            )

        if self.ledger is not None:
            self.ledger.append(RoundSpec(cfg.sampling_rate, cfg.sigma, 1))
        if update.batch_size:
            self.epoch_grad_norms.append(update.grad_norm_mean)
        if self.record_updates:
            self.updates.append(update)
        self.round_index += 1
        return update

    def epoch_done(self) -> bool:
        return self.finished or self.round_index % self.config.rounds_per_epoch == 0

    def epoch_record(self) -> EpochRecord:
        cfg = self.config
        epoch = math.ceil(self.round_index / cfg.rounds_per_epoch)
        loss = logistic_loss(self.w, self.data.X_train, self.data.y_train)
        if not np.isfinite(loss):
            raise DivergenceError(f"client {self.client_id} epoch {epoch}: training loss is {loss}")
        record = EpochRecord(
            epoch=epoch,
            client=self.client_id,
            train_acc=accuracy(self.w, self.data.X_train, self.data.y_train),
            test_acc=accuracy(self.w, self.data.X_test, self.data.y_test),
            train_loss=loss,
            grad_norm_mean=float(np.mean(self.epoch_grad_norms)) if self.epoch_grad_norms else 0.0,
            rounds=self.round_index,
            gradients=self.round_index * cfg.m,
        )
        self.epoch_grad_norms = []
        return record


def run_simulation(clients: Sequence[ClientConfig], server: ServerConfig, data: Sequence[DatasetSpec],
                   seed: int = 0, target_delta: float = 1e-5, max_ticks: Optional[int] = None,
                   record_updates: bool = False) -> SimulationResult:
    """
    Run every client against one server on a logical clock

    Each tick every unfinished client, in id order, either runs one round or
    waits for a fresher global model. After all clients acted the server
    closes its aggregation window if due, evaluates on the pooled test split,
    and broadcasts (each message independently lost with drop_prob).

    Args:
        clients: One config per client
        server: Server policy
        data: One dataset spec per client
        seed: Root seed of every random stream
        target_delta: delta of the per-client ledgers
        max_ticks: Abort with SimulationStalledError past this many ticks
        record_updates: Keep every RoundUpdate in the result

    Raises:
        ConfigError: if clients and data disagree
        DivergenceError: if a model or loss becomes non-finite
        SimulationStalledError: if the run exceeds max_ticks
    """
    if not clients:
        raise ConfigError("clients", "at least one client is required")
    if len(data) != len(clients):
        raise ConfigError("data", f"expected {len(clients)} dataset specs, got {len(data)}")

    datasets = [make_blobs(spec) for spec in data]
    for i, (cfg, ds) in enumerate(zip(clients, datasets)):
        if cfg.N != ds.N:
            raise ConfigError(f"clients[{i}].N", f"{cfg.N} does not match data[{i}].N={ds.N}")
    dims = {ds.dim for ds in datasets}
    if len(dims) != 1:
        raise ConfigError("data", "all clients must share the feature dimension")

    w0 = np.zeros(dims.pop())
    hub = Server(server, w0, len(clients), [stream(seed, i, DROPS) for i in range(len(clients))])
    workers = [
        Client(i, cfg, ds, w0, seed, server.step_schedule.eta0, target_delta, record_updates)
        for i, (cfg, ds) in enumerate(zip(clients, datasets))
    ]
    X_public = np.vstack([ds.X_test for ds in datasets])
    y_public = np.concatenate([ds.y_test for ds in datasets])
    eval_period = server.eval_period or clients[0].rounds_per_epoch
    if max_ticks is None:
        max_ticks = 10 * sum(c.total_rounds for c in clients) + 100

    metrics = Metrics()
    tick = 0
    logger.info(f"Simulating {len(clients)} clients, {sum(c.total_rounds for c in clients)} rounds in total")
    while not all(c.finished for c in workers):
        if tick >= max_ticks:
            waiting = [c.client_id for c in workers if not c.finished]
            raise SimulationStalledError(f"no progress after {tick} ticks; clients {waiting} still waiting")

        for client in workers:
            if client.finished:
                continue
            update = client.step(tick)
            if update is None:
                continue
            hub.receive(update)
            if client.epoch_done():
                record = client.epoch_record()
                metrics.records.append(record)
                logger.info(f"client {record.client} epoch {record.epoch}: "
                            f"train_acc={record.train_acc:.4f} loss={record.train_loss:.4f}")

        hub.end_tick(tick)
        if (tick + 1) % eval_period == 0:
            hub.evaluate(tick, accuracy(hub.w_hat, X_public, y_public))
        for client, message in zip(workers, hub.broadcast(tick)):
            if message is not None and not client.finished:
                client.deliver(message)
        tick += 1

    # flush a window that was still open when the last client finished
    if hub.pending:
        hub.end_tick(hub.config.window_length - 1)

    X_pool = np.vstack([ds.X_train for ds in datasets])
    y_pool = np.concatenate([ds.y_train for ds in datasets])
    w_star = fit_baseline(X_pool, y_pool)
    distances = {c.client_id: float(np.linalg.norm(c.w - w_star)) for c in workers}
    unaccounted = {c.client_id: c.config.shaping is not None for c in workers}
    for cid, flag in unaccounted.items():
        if flag:
            logger.warning(f"client {cid} used arsinh noise shaping; its privacy is unaccounted")

    logger.info(f"Simulation finished after {tick} ticks ({hub.dropped} broadcasts dropped)")
    return SimulationResult(
        metrics=metrics,
        ledgers={c.client_id: c.ledger for c in workers},
        server_model=hub.w_hat,
        client_models={c.client_id: c.w for c in workers},
        server_history=hub.history,
        baseline_distance=distances,
        unaccounted=unaccounted,
        updates={c.client_id: c.updates for c in workers},
        ticks=tick,
    )
