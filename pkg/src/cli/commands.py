"""
src/cli/commands.py
Sub-commands: plan, curve, account, simulate
"""

import argparse
import dataclasses
import json
import logging
from pathlib import Path
from typing import List

import numpy as np

from src.accounting.composition import clt_mu_rounds, round_count, sigma_for_budget
from src.accounting.gaussian_dp import (
    epsdelta_curve,
    eps_of_delta,
    gaussian_curve,
    group_curve,
)
from src.accounting.ledger import AccountLedger, clt_delta_curve, ledger_report
from src.accounting.pld import RoundSpec, pld_delta
from src.accounting.subsampling import cp_operator
from src.cli.output import banner, print_report, print_status
from src.config.run_config import AccountingConfig, dump_run_config, load_run_config
from src.config.settings import Settings
from src.simulation.simulator import run_simulation
from src.tradeoff.curves import profile_to_curve
from src.tradeoff.grid import alpha_grid
from src.tradeoff.io import curve_from_json, curve_to_json, write_curve_csv
from src.utils.errors import AsymptoticRegimeError, ConfigError, PrivacyDomainError
from src.utils.files import atomic_write_json, atomic_write_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SELFCHECK = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_DIVERGENCE = 4

CURVE_FAMILIES = ("gaussian", "epsdelta", "subsampled", "group", "dpsgd")
DPSGD_EPS_MAX = 8.0
DPSGD_EPS_POINTS = 321


def _require(args: argparse.Namespace, *names: str):
    for name in names:
        if getattr(args, name, None) is None:
            raise ConfigError(f"--{name}", "is required here")


def _rounds(args: argparse.Namespace) -> int:
    """T from --T, else ceil((N/m) * E)"""
    if args.T is not None:
        if args.T < 1:
            raise ConfigError("--T", f"must be >= 1, got {args.T}")
        return int(args.T)
    _require(args, "N", "m", "E")
    return round_count(args.N, args.m, args.E)


def _sampling_rate(args: argparse.Namespace) -> float:
    _require(args, "N", "m")
    if not 1 <= args.m <= args.N:
        raise ConfigError("--m", f"must lie in [1, N={args.N}], got {args.m}")
    return args.m / args.N


def _ledger_settings(settings: Settings) -> dict:
    return {
        "budget_points": settings.budget_points,
        "resolution": settings.pld_resolution,
        "tail_sigmas": settings.pld_tail_sigmas,
        "clt_min_sigma": settings.clt_min_sigma,
    }


def cmd_plan(args: argparse.Namespace, settings: Settings) -> int:
    """
    Forward planning (sigma given): mu and eps by both accountants.
    Inverse planning (eps given): sigma for the budget and its validity.
    """
    delta = args.delta if args.delta is not None else settings.default_delta
    p = _sampling_rate(args)
    T = _rounds(args)

    if args.sigma is not None:
        ledger = AccountLedger([RoundSpec(p, args.sigma, T)], target_delta=delta)
        report = ledger_report(ledger, **_ledger_settings(settings))
        print_report(report, f"Plan: N={args.N} m={args.m} T={T} sigma={args.sigma:g}")
        payload = {"mode": "forward", "N": args.N, "m": args.m, "T": T, "sigma": args.sigma,
                   "delta": delta, "report": report.to_dict()}
        clt = report.entry("clt")
        if clt is not None:
            eps = [float(x) for x in settings.budget_points]
            payload["clt_delta_curve"] = {"eps": eps, "delta": clt_delta_curve(clt.mu, eps).tolist()}
        name = "plan.json"
    else:
        _require(args, "eps")
        calibrated = sigma_for_budget(args.eps, delta, args.N, args.m, T)
        banner(f"Plan: eps={args.eps:g} delta={delta:g} N={args.N} m={args.m} T={T}")
        print_status(f"sigma = {calibrated.sigma:.4f}", 'info')
        if calibrated.certified:
            print_status(f"Certified for T <= {calibrated.max_rounds:g}", 'success')
        else:
            print_status(f"Not certified: T={T} exceeds {calibrated.max_rounds:g}", 'warning')

        pld_check = float(pld_delta([RoundSpec(p, calibrated.sigma, T)], [args.eps],
                                    resolution=settings.pld_resolution,
                                    tail_sigmas=settings.pld_tail_sigmas, target_delta=delta)[0])
        status = 'success' if pld_check <= delta else 'warning'
        print_status(f"PLD delta({args.eps:g}) = {pld_check:.6e}", status)
        clt_eps = None
        try:
            clt_eps = eps_of_delta(clt_mu_rounds(p, calibrated.sigma, T, settings.clt_min_sigma).mu, delta)
            print_status(f"CLT eps at delta={delta:g}: {clt_eps:.6g}", 'info')
        except AsymptoticRegimeError as e:
            print_status(str(e), 'warning')

        payload = {"mode": "inverse", "N": args.N, "m": args.m, "T": T, "eps": args.eps, "delta": delta,
                   "sigma": calibrated.sigma, "certified": calibrated.certified,
                   "max_rounds": calibrated.max_rounds, "pld_delta_at_eps": pld_check, "clt_eps": clt_eps}
        name = "plan_inverse.json"

    out = Path(args.out) if args.out else Path(settings.output_dir) / name
    atomic_write_json(out, payload)
    logger.info(f"Wrote plan to {out}")
    return EXIT_OK


def _load_curve(path: str):
    try:
        with open(path, "r") as fh:
            payload = json.load(fh)
    except OSError as e:
        raise ConfigError("--input", f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError("--input", f"{path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise PrivacyDomainError(f"{path}: expected a curve object")
    return curve_from_json(payload)


def _base_curve(args: argparse.Namespace):
    if args.input is not None:
        return _load_curve(args.input)
    if args.mu is not None:
        return gaussian_curve(args.mu)
    if args.sigma is not None:
        return gaussian_curve(1.0 / args.sigma)
    if args.eps is not None:
        return epsdelta_curve(args.eps, args.delta if args.delta is not None else 0.0)
    raise ConfigError("--mu", "give --mu, --sigma, --eps or --input for the base curve")


def build_curve(args: argparse.Namespace, settings: Settings):
    family = args.family
    if family == "gaussian":
        _require(args, "mu")
        return gaussian_curve(args.mu)
    if family == "epsdelta":
        _require(args, "eps")
        return epsdelta_curve(args.eps, args.delta if args.delta is not None else 0.0)
    if family == "subsampled":
        _require(args, "p")
        return cp_operator(_base_curve(args), args.p)
    if family == "group":
        _require(args, "g")
        return group_curve(_base_curve(args), args.g, settings.group_grid_size, settings.gaussian_knot_step)
    if family == "dpsgd":
        _require(args, "sigma")
        p = _sampling_rate(args)
        T = _rounds(args)
        delta = settings.default_delta
        eps = np.linspace(0.0, DPSGD_EPS_MAX, DPSGD_EPS_POINTS)
        deltas = pld_delta([RoundSpec(p, args.sigma, T)], eps, resolution=settings.pld_resolution,
                           tail_sigmas=settings.pld_tail_sigmas, target_delta=delta)
        return profile_to_curve(eps, deltas)
    raise ConfigError("--family", f"unknown family '{family}', expected one of {CURVE_FAMILIES}")


def cmd_curve(args: argparse.Namespace, settings: Settings) -> int:
    f = build_curve(args, settings)
    if args.json:
        out = Path(args.out) if args.out else Path(settings.output_dir) / f"curve_{args.family}.json"
        atomic_write_json(out, curve_to_json(f))
        print_status(f"Wrote {args.family} curve to {out}", 'success')
        return EXIT_OK

    # piecewise curves keep their own knots unless a grid is asked for
    size = args.grid or (settings.grid_size if f.is_analytic else None)
    grid = alpha_grid(size, settings.tail_knots) if size else None
    out = Path(args.out) if args.out else Path(settings.output_dir) / f"curve_{args.family}.csv"
    write_curve_csv(out, f, grid)
    print_status(f"Wrote {args.family} curve to {out}", 'success')
    return EXIT_OK


def _parse_round(text: str) -> RoundSpec:
    """'p,sigma' or 'p,sigma,count'"""
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise ConfigError("--append", f"expected p,sigma[,count], got '{text}'")
    try:
        p, sigma = float(parts[0]), float(parts[1])
        count = int(parts[2]) if len(parts) == 3 else 1
    except ValueError:
        raise ConfigError("--append", f"expected numbers in '{text}'") from None
    return RoundSpec(p, sigma, count)


def load_ledger(path: Path, default_delta: float) -> AccountLedger:
    """
    Read a ledger file; a missing file gives a fresh ledger

    Raises:
        ConfigError: if the file is not a valid ledger
    """
    if not path.exists():
        logger.info(f"No ledger at {path}; starting a fresh one")
        return AccountLedger(target_delta=default_delta)
    try:
        with open(path, 'r') as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError("ledger", f"cannot read {path}: {e}") from None
    return AccountLedger.from_dict(payload)


def cmd_account(args: argparse.Namespace, settings: Settings) -> int:
    path = Path(args.ledger)
    ledger = load_ledger(path, settings.default_delta)
    if args.delta is not None or args.budget is not None:
        ledger = AccountLedger(
            ledger.rounds,
            target_delta=args.delta if args.delta is not None else ledger.target_delta,
            budget_eps=args.budget if args.budget is not None else ledger.budget_eps,
        )

    for text in args.append or []:
        ledger.append(_parse_round(text))
    atomic_write_json(path, ledger.to_dict())
    logger.info(f"Ledger {path}: {ledger.total_rounds} rounds")

    if not ledger.rounds:
        print_status("Ledger is empty", 'info')
        return EXIT_OK

    report = ledger_report(ledger, group=args.group, **_ledger_settings(settings))
    print_report(report, f"Ledger {path.name}: {ledger.total_rounds} rounds")
    if args.report:
        atomic_write_json(args.report, report.to_dict())
    return EXIT_BUDGET if report.budget_exceeded else EXIT_OK


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    config = load_run_config(args.config, args.profile)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    accounting: AccountingConfig = config.accounting

    result = run_simulation(config.clients, config.server, config.data, seed=config.seed,
                            target_delta=accounting.delta, max_ticks=config.max_ticks)

    out_dir = Path(args.out) if args.out else Path(settings.output_dir)
    atomic_write_text(out_dir / "metrics.csv", result.metrics.to_csv())
    dump_run_config(config, out_dir / "config.json")

    clients = {}
    exceeded: List[int] = []
    for cid, ledger in result.ledgers.items():
        entry: dict = {
            "unaccounted": result.unaccounted[cid],
            "baseline_distance": result.baseline_distance[cid],
            "ledger": None,
            "report": None,
        }
        if ledger is None:
            logger.warning(f"client {cid} ran without noise; no privacy guarantee")
        else:
            ledger = AccountLedger(ledger.rounds, accounting.delta, accounting.budget_eps)
            report = ledger_report(ledger, group=accounting.group, **_ledger_settings(settings))
            entry["ledger"] = ledger.to_dict()
            entry["report"] = report.to_dict()
            if report.budget_exceeded:
                exceeded.append(cid)
            print_report(report, f"Client {cid}")
        clients[str(cid)] = entry
    atomic_write_json(out_dir / "privacy_report.json", {"clients": clients})

    banner("Simulation summary")
    for cid in sorted(result.client_models):
        final = result.metrics.final(cid)
        print_status(f"client {cid}: train_acc={final.train_acc:.4f} test_acc={final.test_acc:.4f} "
                     f"rounds={final.rounds} gradients={final.gradients}", 'info')
    print_status(f"Outputs written to {out_dir}", 'success')
    return EXIT_BUDGET if exceeded else EXIT_OK


def add_commands(subparsers, selfcheck_command) -> None:
    """Register every sub-command on an argparse subparsers object"""
    plan = subparsers.add_parser("plan", help="choose sigma or read off the guarantee of a plan")
    plan.add_argument("--N", type=int, help="local data set size")
    plan.add_argument("--m", type=int, help="batch size")
    plan.add_argument("--E", type=float, help="epochs")
    plan.add_argument("--T", type=int, help="rounds (overrides N*E/m)")
    plan.add_argument("--sigma", type=float, help="noise multiplier (forward planning)")
    plan.add_argument("--eps", type=float, help="target epsilon (inverse planning)")
    plan.add_argument("--delta", type=float, help="target delta")
    plan.add_argument("--out", help="JSON output path")
    plan.set_defaults(command=cmd_plan)

    curve = subparsers.add_parser("curve", help="write a trade-off curve as CSV")
    curve.add_argument("--family", required=True, help=f"one of {', '.join(CURVE_FAMILIES)}")
    curve.add_argument("--mu", type=float)
    curve.add_argument("--eps", type=float)
    curve.add_argument("--delta", type=float)
    curve.add_argument("--p", type=float, help="sampling rate for subsampled curves")
    curve.add_argument("--sigma", type=float)
    curve.add_argument("--g", type=int, help="group size")
    curve.add_argument("--N", type=int)
    curve.add_argument("--m", type=int)
    curve.add_argument("--E", type=float)
    curve.add_argument("--T", type=int)
    curve.add_argument("--grid", type=int, help="sample on a uniform alpha grid of this size (default: grid_size setting for analytic curves)")
    curve.add_argument("--input", help="JSON curve object to use as the base curve")
    curve.add_argument("--json", action="store_true", help="write the curve as a JSON object instead of CSV")
    curve.add_argument("--out", help="CSV output path")
    curve.set_defaults(command=cmd_curve)

    account = subparsers.add_parser("account", help="append rounds to a ledger and report")
    account.add_argument("--ledger", required=True, help="ledger JSON (created if absent)")
    account.add_argument("--append", action="append", metavar="P,SIGMA[,COUNT]")
    account.add_argument("--delta", type=float)
    account.add_argument("--budget", type=float, help="epsilon budget")
    account.add_argument("--group", type=int, default=1)
    account.add_argument("--report", help="also write the report JSON here")
    account.set_defaults(command=cmd_account)

    simulate = subparsers.add_parser("simulate", help="run a federated DP-SGD simulation")
    simulate.add_argument("--config", required=True, help="run configuration JSON")
    simulate.add_argument("--profile", help="profile name when the file holds several")
    simulate.add_argument("--out", help="output directory")
    simulate.add_argument("--seed", type=int, help="override the configured seed")
    simulate.set_defaults(command=cmd_simulate)

    selfcheck = subparsers.add_parser("selfcheck", help="verify the accountant against its oracles")
    selfcheck.set_defaults(command=selfcheck_command)
