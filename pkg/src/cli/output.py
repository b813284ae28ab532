"""
src/cli/output.py
Console rendering of status lines and privacy reports
"""

import sys
from typing import Optional

from src.accounting.ledger import PrivacyReport

STATUS_SYMBOLS = {
    'success': '\033[92m✓',
    'error': '\033[91m✗',
    'warning': '\033[93m⚠',
    'info': '\033[94mℹ',
}
RESET = '\033[0m'


def print_status(message: str, status: str, stream=None):
    """Print a status line; colours only when writing to a terminal"""
    stream = stream or sys.stdout
    symbol = STATUS_SYMBOLS.get(status, '')
    if stream.isatty():
        print(f"{symbol} {message}{RESET}", file=stream)
    else:
        plain = symbol.split('m', 1)[-1] if symbol else ''
        print(f"{plain} {message}".strip(), file=stream)


def banner(title: str):
    print("\n" + "=" * 60)
    print(f"  {title}")
    print("=" * 60 + "\n")


def _fmt(value: Optional[float], spec: str = ".6g") -> str:
    return "n/a" if value is None else format(value, spec)


def print_report(report: PrivacyReport, title: str = "Privacy report"):
    """Side-by-side CLT and PLD figures, then delta at the budget points"""
    banner(title)
    for entry in report.entries:
        label = "CLT (Gaussian DP)" if entry.method == "clt" else "PLD (numeric)"
        line = f"{label:<20} eps={_fmt(entry.eps_at_delta)} at delta={entry.delta:g}"
        if entry.mu is not None:
            line += f"  mu={_fmt(entry.mu)}  rho={_fmt(entry.zcdp_rho)}"
        if entry.vacuous:
            line += "  (vacuous)"
        print_status(line, 'warning' if entry.vacuous else 'info')

    if report.budget_points:
        print("\n  eps      delta(eps)")
        for eps, delta in report.budget_points.items():
            print(f"  {eps:<8g} {delta:.6e}")

    for warning in report.warnings:
        print_status(warning, 'warning')

    if report.budget_eps is not None:
        if report.budget_exceeded:
            print_status(f"Budget eps={report.budget_eps:g} exceeded: stop contributing rounds", 'error')
        else:
            print_status(f"Within budget eps={report.budget_eps:g}", 'success')
