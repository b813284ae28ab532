# src/utils/__init__.py
"""Utility modules"""
from .errors import (
    AsymptoticRegimeError,
    ConfigError,
    DivergenceError,
    InvalidCurveError,
    LedgerError,
    PrivacyDomainError,
    ResolutionError,
    SimulationStalledError,
    UnreachableDeltaError,
)
from .files import atomic_write_json, atomic_write_text

__all__ = [
    'AsymptoticRegimeError',
    'ConfigError',
    'DivergenceError',
    'InvalidCurveError',
    'LedgerError',
    'PrivacyDomainError',
    'ResolutionError',
    'SimulationStalledError',
    'UnreachableDeltaError',
    'atomic_write_json',
    'atomic_write_text',
]
