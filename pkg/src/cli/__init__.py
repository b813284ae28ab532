# src/cli/__init__.py
"""Command-line front end"""
from .commands import (
    CURVE_FAMILIES,
    EXIT_BUDGET,
    EXIT_DIVERGENCE,
    EXIT_OK,
    EXIT_SELFCHECK,
    EXIT_USAGE,
    add_commands,
    build_curve,
    cmd_account,
    cmd_curve,
    cmd_plan,
    cmd_simulate,
    load_ledger,
)
from .selfcheck import CHECKS, CheckResult, cmd_selfcheck, run_checks

__all__ = [
    'CHECKS', 'CURVE_FAMILIES', 'CheckResult',
    'EXIT_BUDGET', 'EXIT_DIVERGENCE', 'EXIT_OK', 'EXIT_SELFCHECK', 'EXIT_USAGE',
    'add_commands', 'build_curve', 'cmd_account', 'cmd_curve', 'cmd_plan', 'cmd_selfcheck',
    'cmd_simulate', 'load_ledger', 'run_checks',
]
