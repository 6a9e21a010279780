"""Risk measure, IRB capital charge, leverage ratio, and pricing-measure calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from scipy.stats import norm

from .errors import CalibrationInfeasible, DomainError
from .scenario import LoanSpec

DEFAULT_IRB_CONFIDENCE = 0.999


@dataclass(frozen=True)
class MarketParams:
    """Market, funding, and regulatory parameters.

    beta_st: fraction of debt that is short-term (due at t=1)
    r:       risk-free rate, equal to the safe loan's rate
    r_d:     long-term debt rate, r_d <= r
    r_e:     target return on equity in the equity holder's constraint
    delta:   cost of equity in the t=0 objective
    phi_e, phi_d: proportional issuance costs for new equity / new debt
    k_lev:   leverage-ratio floor
    theta1, theta2: portfolio risk caps at t=0 and t=1
    cap_e, cap_d:   maxima on new equity / new debt issued at t=1
    """

    beta_st: float
    r: float
    r_d: float
    r_e: float
    delta: float
    phi_e: float
    phi_d: float
    k_lev: float
    theta1: float
    theta2: float
    cap_e: float
    cap_d: float
    irb_confidence: float = DEFAULT_IRB_CONFIDENCE

    def __post_init__(self):
        if not 0.0 <= self.beta_st <= 1.0:
            raise ValueError(f"beta_st must lie in [0,1], got {self.beta_st}")
        for name in ("r", "r_d", "r_e"):
            if not getattr(self, name) > -1.0:
                raise ValueError(f"{name} must exceed -1")
        if self.r_d > self.r:
            raise ValueError(f"r_d must not exceed r, got r_d={self.r_d} > r={self.r}")
        for name in ("phi_e", "phi_d"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0,1)")
        for name in ("k_lev", "theta1", "theta2", "cap_e", "cap_d"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 < self.irb_confidence < 1.0:
            raise ValueError("irb_confidence must lie in (0,1)")

    @property
    def beta_lt(self) -> float:
        return 1.0 - self.beta_st


@dataclass(frozen=True)
class RiskNeutralWeights:
    """Per-loan one-period risk-neutral default probabilities."""

    q: tuple[float, float, float]

    def __post_init__(self):
        if self.q[0] != 0.0:
            raise ValueError("the safe loan has q = 0")
        for qi in self.q:
            if not 0.0 <= qi <= 1.0:
                raise ValueError(f"q must lie in [0,1], got {qi}")


RiskMeasure = Callable[[Sequence[float], Sequence[LoanSpec]], float]


def rho(x: Sequence[float], loans: Sequence[LoanSpec]) -> float:
    """One-period expected loss of the positions: sum_i x_i * pd_i * lgd_i."""
    return sum(xi * ln.pd * ln.lgd for xi, ln in zip(x, loans))


def basel_correlation(pd: float) -> float:
    """Basel corporate asset correlation as a function of PD."""
    w = (1.0 - math.exp(-50.0 * pd)) / (1.0 - math.exp(-50.0))
    return 0.12 * w + 0.24 * (1.0 - w)


def irb_capital_single(loan: LoanSpec, confidence: float = DEFAULT_IRB_CONFIDENCE) -> float:
    """IRB unexpected-loss capital charge per unit of one loan.

    K = lgd * [ Phi( (Phi^-1(pd) + sqrt(R) Phi^-1(c)) / sqrt(1-R) ) - pd ]
    with R the Basel corporate correlation.  pd = 0 charges nothing.
    """
    if loan.pd == 0.0:
        return 0.0
    if loan.pd >= 1.0:
        raise DomainError("IRB charge undefined at pd = 1")
    corr = basel_correlation(loan.pd)
    arg = (norm.ppf(loan.pd) + math.sqrt(corr) * norm.ppf(confidence)) / math.sqrt(1.0 - corr)
    return loan.lgd * (norm.cdf(arg) - loan.pd)


def irb_capital(
    x: Sequence[float],
    loans: Sequence[LoanSpec],
    confidence: float = DEFAULT_IRB_CONFIDENCE,
) -> float:
    """Portfolio IRB capital requirement: linear aggregation of per-loan charges."""
    if not 0.0 < confidence < 1.0:
        raise DomainError("confidence must lie in (0,1)")
    return sum(xi * irb_capital_single(ln, confidence) for xi, ln in zip(x, loans))


def leverage_ratio(assets: float, debt_value: float) -> float:
    """Tier-1-style ratio: (assets - debt) / assets."""
    if assets == 0.0:
        raise ZeroDivisionError("leverage ratio undefined on an empty balance sheet")
    return (assets - debt_value) / assets


def calibrate_q(loans: Sequence[LoanSpec], r: float) -> RiskNeutralWeights:
    """One-period martingale calibration of risk-neutral default probabilities.

    Solves (1-q)(1+rate) + q(1-lgd) = 1+r per loan, giving
    q = (rate - r) / (rate + lgd).
    """
    qs = [0.0]
    for i, loan in enumerate(loans[1:], start=1):
        spread = loan.rate + loan.lgd
        if spread == 0.0 or r >= loan.rate:
            raise CalibrationInfeasible(
                f"loan {i}: need 1-lgd < 1+r < 1+rate for a q in (0,1)"
            )
        if 1.0 - loan.lgd >= 1.0 + r:
            raise CalibrationInfeasible(
                f"loan {i}: recovery dominates the risk-free payoff"
            )
        qs.append((loan.rate - r) / spread)
    return RiskNeutralWeights(q=tuple(qs))
