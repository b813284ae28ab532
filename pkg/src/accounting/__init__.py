# src/accounting/__init__.py
"""Privacy accounting: Gaussian DP, subsampling, composition and ledgers"""
from .composition import (
    CalibratedSigma,
    PlanInput,
    clt_mu,
    clt_mu_rounds,
    compose_gaussian,
    h_of_sigma,
    h_of_sigma_quadrature,
    sigma_for_budget,
)
from .gaussian_dp import (
    DivergenceGuarantee,
    EpsDeltaGuarantee,
    GdpGuarantee,
    advanced_composition,
    delta_of_eps,
    divergence_of_gdp,
    epsdelta_curve,
    epsdelta_group,
    eps_of_delta,
    gaussian_curve,
    group_curve,
)
from .ledger import AccountLedger, MethodReport, PrivacyReport, clt_delta_curve, ledger_report
from .pld import PrivacyLossDistribution, RoundSpec, compose_rounds, pld_delta, round_profile
from .subsampling import cp_operator, np_mixture_oracle

__all__ = [
    'AccountLedger',
    'CalibratedSigma',
    'DivergenceGuarantee',
    'EpsDeltaGuarantee',
    'GdpGuarantee',
    'MethodReport',
    'PlanInput',
    'PrivacyLossDistribution',
    'PrivacyReport',
    'RoundSpec',
    'advanced_composition',
    'clt_delta_curve',
    'clt_mu',
    'clt_mu_rounds',
    'compose_gaussian',
    'compose_rounds',
    'cp_operator',
    'delta_of_eps',
    'divergence_of_gdp',
    'epsdelta_curve',
    'epsdelta_group',
    'eps_of_delta',
    'gaussian_curve',
    'group_curve',
    'h_of_sigma',
    'h_of_sigma_quadrature',
    'ledger_report',
    'np_mixture_oracle',
    'pld_delta',
    'round_profile',
    'sigma_for_budget',
]
