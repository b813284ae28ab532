# src/config/__init__.py
"""Configuration management modules"""
from .run_config import (
    AccountingConfig,
    RunConfig,
    dump_run_config,
    load_run_config,
    parse_run_config,
    run_config_to_dict,
)
from .settings import Settings

__all__ = [
    'AccountingConfig', 'RunConfig', 'Settings',
    'dump_run_config', 'load_run_config', 'parse_run_config', 'run_config_to_dict',
]
