# src/simulation/__init__.py
"""Federated DP-SGD simulation on synthetic logistic-regression data"""
from .data import Dataset, DatasetSpec, make_blobs
from .dp_sgd import (
    ClipSchedule,
    RoundUpdate,
    SamplingMode,
    arsinh_shape,
    clip,
    clip_rows,
    gradient_check,
    local_round,
    neighbor_sensitivity,
    noise_std,
    sample,
)
from .model import accuracy, fit_baseline, grad_logistic, logistic_loss, per_sample_gradients
from .server import Broadcast, Server, ServerConfig, StepController, StepSchedule, server_apply
from .simulator import (
    METRICS_HEADER,
    Client,
    ClientConfig,
    EpochRecord,
    Metrics,
    SimulationResult,
    run_simulation,
    stream,
)

__all__ = [
    'Dataset', 'DatasetSpec', 'make_blobs',
    'ClipSchedule', 'RoundUpdate', 'SamplingMode', 'arsinh_shape', 'clip', 'clip_rows',
    'gradient_check', 'local_round', 'neighbor_sensitivity', 'noise_std', 'sample',
    'accuracy', 'fit_baseline', 'grad_logistic', 'logistic_loss', 'per_sample_gradients',
    'Broadcast', 'Server', 'ServerConfig', 'StepController', 'StepSchedule', 'server_apply',
    'METRICS_HEADER', 'Client', 'ClientConfig', 'EpochRecord', 'Metrics', 'SimulationResult',
    'run_simulation', 'stream',
]
