"""
src/accounting/ledger.py
Per-client privacy ledger and the reports built from it
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.accounting.composition import CLT_MIN_SIGMA, clt_mu_rounds, compose_gaussian
from src.accounting.gaussian_dp import (
    delta_of_eps,
    divergence_of_gdp,
    epsdelta_group,
    eps_of_delta,
)
from src.accounting.pld import (
    DEFAULT_RESOLUTION,
    DEFAULT_TAIL_SIGMAS,
    RoundSpec,
    compose_rounds,
)
from src.utils.errors import (
    AsymptoticRegimeError,
    ConfigError,
    LedgerError,
    PrivacyDomainError,
    UnreachableDeltaError,
)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET_POINTS = (0.5, 1.0, 2.0, 4.0, 8.0)


@dataclass
class AccountLedger:
    """
    A client's cumulative privacy state

    Rounds are kept in order; appending a spec equal to the last one merges
    the counts, so the same rounds always give the same ledger regardless of
    how they were appended.
    """
    rounds: List[RoundSpec] = field(default_factory=list)
    target_delta: float = 1e-5
    budget_eps: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.target_delta < 1.0:
            raise ConfigError("target_delta", f"must lie in (0, 1), got {self.target_delta}")
        if self.budget_eps is not None and not self.budget_eps >= 0:
            raise ConfigError("budget_eps", f"must be >= 0, got {self.budget_eps}")

    def append(self, spec: RoundSpec) -> "AccountLedger":
        if self.rounds and self.rounds[-1].same_mechanism(spec):
            last = self.rounds[-1]
            self.rounds[-1] = RoundSpec(last.p, last.sigma, last.count + spec.count)
        else:
            self.rounds.append(spec)
        return self

    @property
    def total_rounds(self) -> int:
        return sum(int(r.count) for r in self.rounds)

    @property
    def is_homogeneous(self) -> bool:
        return bool(self.rounds) and all(r.same_mechanism(self.rounds[0]) for r in self.rounds)

    def to_dict(self) -> dict:
        return {
            "rounds": [r.to_dict() for r in self.rounds],
            "target_delta": self.target_delta,
            "budget_eps": self.budget_eps,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AccountLedger":
        """
        Rebuild a ledger from its JSON form

        Raises:
            ConfigError: naming the first malformed field
        """
        if not isinstance(payload, dict):
            raise ConfigError("ledger", "expected a JSON object")
        rounds = payload.get("rounds", [])
        if not isinstance(rounds, list):
            raise ConfigError("rounds", "expected a list")

        ledger = cls(
            target_delta=_number(payload, "target_delta", 1e-5),
            budget_eps=_number(payload, "budget_eps", None),
        )
        for i, item in enumerate(rounds):
            try:
                ledger.append(RoundSpec(float(item["p"]), float(item["sigma"]), int(item.get("count", 1))))
            except (KeyError, TypeError, ValueError) as e:
                raise ConfigError(f"rounds[{i}]", str(e)) from e
        return ledger


def _number(payload: dict, key: str, default):
    value = payload.get(key, default)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(key, f"expected a number, got {value!r}") from e


@dataclass(frozen=True)
class MethodReport:
    """One accounting path's view of the guarantee"""
    method: str
    mu: Optional[float]
    eps_at_delta: Optional[float]
    delta: float
    zcdp_rho: Optional[float]
    group: int
    T: int
    p: Optional[float]
    sigma: Optional[float]
    vacuous: bool = False

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "eps_at_delta": self.eps_at_delta,
            "delta": self.delta,
            "zcdp_rho": self.zcdp_rho,
            "group": self.group,
            "T": self.T,
            "p": self.p,
            "sigma": self.sigma,
            "method": self.method,
            "vacuous": self.vacuous,
        }


@dataclass
class PrivacyReport:
    entries: List[MethodReport]
    budget_points: Dict[float, float]
    budget_eps: Optional[float] = None
    budget_exceeded: bool = False
    warnings: List[str] = field(default_factory=list)

    def entry(self, method: str) -> Optional[MethodReport]:
        for item in self.entries:
            if item.method == method:
                return item
        return None

    @property
    def eps(self) -> Optional[float]:
        """The binding eps: numeric when available, asymptotic otherwise"""
        for method in ("pld", "clt"):
            item = self.entry(method)
            if item is not None:
                return item.eps_at_delta
        return None

    def to_dict(self) -> dict:
        return {
            "reports": [e.to_dict() for e in self.entries],
            "delta_at_eps": {repr(float(k)): v for k, v in self.budget_points.items()},
            "budget_eps": self.budget_eps,
            "budget_exceeded": self.budget_exceeded,
            "warnings": list(self.warnings),
        }


def ledger_report(ledger: AccountLedger, group: int = 1,
                  budget_points: Sequence[float] = DEFAULT_BUDGET_POINTS,
                  resolution: float = DEFAULT_RESOLUTION,
                  tail_sigmas: float = DEFAULT_TAIL_SIGMAS,
                  clt_min_sigma: float = CLT_MIN_SIGMA) -> PrivacyReport:
    """
    Summarize a ledger for a group of size g

    The CLT path (closed form when every round has p = 1) applies to
    homogeneous ledgers and scales mu by g. The PLD path composes the rounds
    numerically; for g > 1 it reports g*eps_1 where eps_1 is taken at
    delta / (g e^{g-1}).

    Raises:
        LedgerError: if the ledger is empty
        PrivacyDomainError: if group < 1
    """
    if not ledger.rounds:
        raise LedgerError("cannot report on an empty ledger")
    if group < 1 or int(group) != group:
        raise PrivacyDomainError(f"group size must be a positive integer, got {group}")
    group = int(group)

    delta = ledger.target_delta
    T = ledger.total_rounds
    homogeneous = ledger.is_homogeneous
    p = ledger.rounds[0].p if homogeneous else None
    sigma = ledger.rounds[0].sigma if homogeneous else None
    warnings: List[str] = []
    entries: List[MethodReport] = []

    # CLT / closed-form path
    try:
        mu = _gaussian_mu(ledger, clt_min_sigma)
        if mu is not None:
            mu_g = group * mu
            entries.append(MethodReport(
                method="clt",
                mu=mu_g,
                eps_at_delta=eps_of_delta(mu_g, delta),
                delta=delta,
                zcdp_rho=divergence_of_gdp(mu, group=group).rho,
                group=group, T=T, p=p, sigma=sigma,
            ))
        else:
            warnings.append("CLT path needs identical rounds; reporting PLD only")
    except AsymptoticRegimeError as e:
        logger.warning(f"{e}; reporting PLD only")
        warnings.append(str(e))

    # Numeric path
    scale = group * np.exp(group - 1)
    inner_delta = delta / scale
    points = sorted(float(x) for x in budget_points)
    eps_max = max(points + [ledger.budget_eps or 0.0]) / group
    pld = compose_rounds(ledger.rounds, eps_max, resolution, tail_sigmas, inner_delta)

    try:
        eps_inner = pld.epsilon(inner_delta)
        eps_pld = epsdelta_group(eps_inner, inner_delta, group).eps
        vacuous = False
    except UnreachableDeltaError as e:
        logger.warning(f"PLD guarantee is vacuous: {e}")
        eps_pld, vacuous = None, True
    entries.append(MethodReport(
        method="pld", mu=None, eps_at_delta=eps_pld, delta=delta, zcdp_rho=None,
        group=group, T=T, p=p, sigma=sigma, vacuous=vacuous,
    ))

    budget_delta = {}
    for eps in points:
        inner = float(pld.delta(eps / group))
        budget_delta[eps] = epsdelta_group(eps / group, inner, group).delta

    binding = eps_pld
    exceeded = False
    if ledger.budget_eps is not None:
        exceeded = binding is None or binding > ledger.budget_eps
        if exceeded:
            logger.warning(f"Privacy budget eps={ledger.budget_eps:g} exceeded")

    return PrivacyReport(entries, budget_delta, ledger.budget_eps, exceeded, warnings)


def _gaussian_mu(ledger: AccountLedger, clt_min_sigma: float) -> Optional[float]:
    """
    mu of the whole ledger: exact when every round samples the full data
    set, the CLT asymptote for identical subsampled rounds, None otherwise
    """
    if all(r.p == 1.0 for r in ledger.rounds):
        return compose_gaussian(np.sqrt(r.count) / r.sigma for r in ledger.rounds).mu
    if not ledger.is_homogeneous:
        return None
    spec = ledger.rounds[0]
    return clt_mu_rounds(spec.p, spec.sigma, ledger.total_rounds, clt_min_sigma).mu


def clt_delta_curve(mu: float, eps_grid) -> np.ndarray:
    """delta(eps) of the asymptotic guarantee, for side-by-side reporting"""
    return np.asarray(delta_of_eps(mu, np.asarray(eps_grid, dtype=float)))
