"""
src/tradeoff/io.py
CSV and JSON serialization of trade-off curves
"""

import io
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.tradeoff.curves import CurveKind, TradeoffCurve, evaluate
from src.tradeoff.grid import alpha_grid
from src.utils.errors import InvalidCurveError, PrivacyDomainError
from src.utils.files import atomic_write_text

logger = logging.getLogger(__name__)

CSV_HEADER = "alpha,beta"


def curve_to_csv(f: TradeoffCurve, grid: Optional[np.ndarray] = None) -> str:
    """
    Render a curve as "alpha,beta" rows with 17 significant digits

    Piecewise-linear curves are written knot by knot unless a grid is given;
    analytic curves are sampled on the standard alpha grid.
    """
    if grid is None:
        grid = f.alphas if not f.is_analytic else alpha_grid()
    grid = np.asarray(grid, dtype=float)
    rows = np.column_stack([grid, evaluate(f, grid)])

    buffer = io.StringIO()
    np.savetxt(buffer, rows, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")
    return buffer.getvalue()


def write_curve_csv(path: Union[str, Path], f: TradeoffCurve,
                    grid: Optional[np.ndarray] = None) -> Path:
    path = Path(path)
    atomic_write_text(path, curve_to_csv(f, grid))
    logger.info(f"Wrote {f.kind.value} curve to {path}")
    return path


def read_curve_csv(path: Union[str, Path]) -> TradeoffCurve:
    """
    Load an "alpha,beta" CSV as a piecewise-linear curve

    Raises:
        InvalidCurveError: if the header is wrong or the knots break an axiom
    """
    path = Path(path)
    with open(path, "r") as fh:
        header = fh.readline().strip()
    if header != CSV_HEADER:
        raise InvalidCurveError([f"header: expected '{CSV_HEADER}', got '{header}'"])

    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return TradeoffCurve.piecewise(rows[:, 0], rows[:, 1])


def curve_to_json(f: TradeoffCurve) -> dict:
    """JSON object {"variant": ..., "params": {...}}"""
    if f.kind == CurveKind.PIECEWISE:
        params = {"alphas": f.alphas.tolist(), "betas": f.betas.tolist()}
    else:
        params = f.params()
    return {"variant": f.kind.value, "params": params}


def curve_from_json(payload: dict) -> TradeoffCurve:
    try:
        kind = CurveKind(payload["variant"])
        params = payload.get("params", {})
        if kind == CurveKind.PERFECT:
            return TradeoffCurve.perfect()
        if kind == CurveKind.GAUSSIAN:
            return TradeoffCurve.gaussian(float(params["mu"]))
        if kind == CurveKind.EPS_DELTA:
            return TradeoffCurve.eps_delta(float(params["eps"]), float(params["delta"]))
        return TradeoffCurve.piecewise(params["alphas"], params["betas"])
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, (InvalidCurveError, PrivacyDomainError)):
            raise
        raise PrivacyDomainError(f"Malformed curve object: {e}") from e
