"""
DP-SGD privacy ledger
Main package initialization
"""

__version__ = "0.1.0"
