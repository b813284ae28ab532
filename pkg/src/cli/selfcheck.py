"""
src/cli/selfcheck.py
Oracle checks of the accountant and the gradient code
"""

import argparse
import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from src.accounting import composition, gaussian_dp
from src.accounting.pld import RoundSpec, pld_delta
from src.accounting.subsampling import cp_operator, np_mixture_oracle
from src.cli.output import banner, print_status
from src.config.settings import Settings
from src.simulation.dp_sgd import gradient_check
from src.tradeoff.curves import sup_distance, symmetrize
from src.utils.errors import LedgerError

logger = logging.getLogger(__name__)

SUBSAMPLING_CASES = tuple((p, sigma) for p in (0.01, 0.1, 0.5) for sigma in (1.0, 2.0, 4.0))
SUBSAMPLING_TOL = 1e-4
PLD_TOL = 1e-6
GROUP_CASES = tuple((mu, g) for mu in (0.25, 0.5, 1.0) for g in range(2, 9))
GROUP_TOL = 1e-3
CLT_SIGMAS = (0.5, 1.0, 2.0, 5.0, 20.0)
CLT_TOL = 1e-6
# (eps, delta, N, m) confirmed numerically at T = eps (N/m)^2 / 2
CALIBRATION_CASES = (
    (2.0, 1e-5, 10_000, 100),
    (1.0, 1e-5, 10_000, 100),
    (4.0, 1e-5, 10_000, 100),
    (2.0, 1e-6, 60_000, 600),
    (0.5, 1e-5, 10_000, 200),
)
GRADIENT_TOL = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _worst(errors: List[float]) -> float:
    """Largest error; any non-finite error counts as infinitely bad"""
    values = np.asarray(errors, dtype=float)
    if not np.all(np.isfinite(values)):
        return float("inf")
    return float(values.max())


def check_subsampling(settings: Settings) -> Tuple[bool, str]:
    """C_p(G_{1/sigma}) against the symmetrized Neyman-Pearson mixture test"""
    errors = []
    for p, sigma in SUBSAMPLING_CASES:
        operator = cp_operator(gaussian_dp.gaussian_curve(1.0 / sigma), p)
        oracle = symmetrize(np_mixture_oracle(p, sigma, settings.oracle_grid_size))
        errors.append(sup_distance(operator, oracle))
    worst = _worst(errors)
    return worst <= SUBSAMPLING_TOL, f"sup-norm {worst:.2e} (tol {SUBSAMPLING_TOL:g})"


def check_pld(settings: Settings) -> Tuple[bool, str]:
    """Four full-batch rounds at sigma=2 are exactly 1-GDP"""
    eps = np.linspace(0.0, 5.0, 20)
    numeric = pld_delta([RoundSpec(1.0, 2.0, 4)], eps, resolution=settings.pld_resolution,
                        tail_sigmas=settings.pld_tail_sigmas)
    exact = gaussian_dp.delta_of_eps(1.0, eps)
    err = _worst(np.abs(numeric - exact))
    return err <= PLD_TOL, f"max |delta error| {err:.2e} (tol {PLD_TOL:g})"


def check_group(settings: Settings) -> Tuple[bool, str]:
    errors = []
    for mu, g in GROUP_CASES:
        grouped = gaussian_dp.group_curve(gaussian_dp.gaussian_curve(mu), g, settings.group_grid_size,
                                          settings.gaussian_knot_step)
        errors.append(sup_distance(grouped, gaussian_dp.gaussian_curve(g * mu)))
    worst = _worst(errors)
    return worst <= GROUP_TOL, f"sup-norm {worst:.2e} (tol {GROUP_TOL:g})"


def check_clt(settings: Settings) -> Tuple[bool, str]:
    """Closed-form h(sigma) against its defining integral"""
    errors = []
    for sigma in CLT_SIGMAS:
        closed = composition.h_of_sigma(sigma)
        integral = composition.h_of_sigma_quadrature(sigma)
        errors.append(abs(closed - integral) / integral)
    worst = _worst(errors)
    return worst <= CLT_TOL, f"relative h(sigma) error {worst:.2e} (tol {CLT_TOL:g})"


def check_calibration(settings: Settings) -> Tuple[bool, str]:
    """sigma for (2, 1e-5), then a numeric confirmation at the certified T of each case"""
    calibrated = composition.sigma_for_budget(2.0, 1e-5, 10_000, 100, 10_000)
    if abs(calibrated.sigma - 3.6760) > 1e-4 or not calibrated.certified:
        return False, f"sigma={calibrated.sigma:.6f}, certified={calibrated.certified}"

    ratios = []
    for eps, delta, N, m in CALIBRATION_CASES:
        sigma = composition.sigma_for_budget(eps, delta, N, m, 1)
        T = int(sigma.max_rounds)
        numeric = float(pld_delta([RoundSpec(m / N, sigma.sigma, T)], [eps],
                                  resolution=settings.pld_resolution,
                                  tail_sigmas=settings.pld_tail_sigmas)[0])
        ratios.append(numeric / delta)
    worst = _worst(ratios)
    return worst <= 1.0, f"sigma={calibrated.sigma:.4f}, worst PLD delta/target {worst:.2e}"


def check_gradients(settings: Settings) -> Tuple[bool, str]:
    rng = np.random.default_rng(2024)
    errors = []
    for _ in range(100):
        w = rng.normal(size=4)
        x = np.append(rng.normal(size=3), 1.0)
        errors.append(gradient_check(w, x, float(rng.integers(0, 2))))
    worst = _worst(errors)
    return worst <= GRADIENT_TOL, f"relative error {worst:.2e} (tol {GRADIENT_TOL:g})"


CHECKS: List[Tuple[str, Callable[[Settings], Tuple[bool, str]]]] = [
    ("subsampling", check_subsampling),
    ("pld", check_pld),
    ("group", check_group),
    ("clt", check_clt),
    ("calibration", check_calibration),
    ("gradients", check_gradients),
]


def run_checks(settings: Settings) -> List[CheckResult]:
    results = []
    for name, check in CHECKS:
        start = time.perf_counter()
        try:
            passed, detail = check(settings)
        except (LedgerError, ArithmeticError, ValueError) as e:
            logger.error(f"Check {name} raised: {e}")
            passed, detail = False, f"raised {type(e).__name__}: {e}"
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - start))
    return results


def cmd_selfcheck(args: argparse.Namespace, settings: Settings) -> int:
    banner("Self-check")
    results = run_checks(settings)
    for result in results:
        status = 'success' if result.passed else 'error'
        print_status(f"{result.name:<12} {result.detail} [{result.seconds:.2f}s]", status)

    failed = [r.name for r in results if not r.passed]
    if failed:
        print_status(f"Failed checks: {', '.join(failed)}", 'error')
        return 1
    print_status("All checks passed", 'success')
    return 0
