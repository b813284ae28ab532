"""
src/utils/errors.py
Exception types shared by the accountant, the simulator and the CLI
"""

from typing import List


class LedgerError(Exception):
    """Base class for every error raised by this package"""


class PrivacyDomainError(LedgerError, ValueError):
    """An argument lies outside the domain of the requested operation"""


class UnreachableDeltaError(PrivacyDomainError):
    """The requested delta cannot be met by any finite epsilon"""


class InvalidCurveError(LedgerError, ValueError):
    """A trade-off curve violates the trade-off function axioms"""

    def __init__(self, violations: List):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations[:3])
        if len(self.violations) > 3:
            summary += f" (+{len(self.violations) - 3} more)"
        super().__init__(f"Invalid trade-off curve: {summary}")


class AsymptoticRegimeError(LedgerError):
    """The central-limit approximation is refused for these parameters"""


class ResolutionError(LedgerError):
    """Discretization too coarse for the requested accuracy"""


class ConfigError(LedgerError, ValueError):
    """Invalid configuration; the message names the offending field"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DivergenceError(LedgerError, RuntimeError):
    """Training produced a non-finite loss or model"""


class SimulationStalledError(LedgerError, RuntimeError):
    """No client can make progress any more"""
