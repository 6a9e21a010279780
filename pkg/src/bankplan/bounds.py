"""Closed-form caps, thresholds, and monotonicity regimes for the t=1 problem.

Each function returns the analytical bound implied by one of the model's
constraints, evaluated at a realized node state.  ``verify_bound_bruteforce``
cross-checks any cap against a dense scan of the underlying constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .measures import MarketParams
from .scenario import LoanSpec, ScenarioTree
from .stage0 import Stage0Decision
from .stage1 import NodeState

BELOW_TARGET = "below_target"
ABOVE_TARGET = "above_target"
NOT_APPLICABLE = "not_applicable"
UNCONDITIONAL = "unconditional"


@dataclass(frozen=True)
class BoundReport:
    """A single analytical bound with the inputs it was computed from."""

    name: str
    cap_value: float
    regime: str
    inputs: dict = field(default_factory=dict)

    def applicable(self) -> bool:
        return self.regime != NOT_APPLICABLE


def _long_claim_t1(params: MarketParams, e: float) -> float:
    return params.beta_lt * (1.0 - e) * (1.0 + params.r_d)


def survival_beta_bound(d0: Stage0Decision, loans: Sequence[LoanSpec]) -> float:
    """Largest short-term debt share surviving the worst t=1 scenario.

    In the worst node every risky loan defaults, so the portfolio is worth
    x0(1+r) + sum_i x_i(1-lgd_i) against a short-term claim beta_st(1-e).
    """
    if d0.e >= 1.0:
        raise ValueError("needs e < 1")
    worst = d0.x[0] * (1.0 + loans[0].rate) + sum(
        d0.x[i] * (1.0 - loans[i].lgd) for i in (1, 2)
    )
    return worst / (1.0 - d0.e)


def safe_floor_x0(
    x1: float, x2: float, e: float, params: MarketParams,
    loans: Sequence[LoanSpec],
) -> float:
    """Safe-asset position needed to cover the short-term claim in the worst node."""
    if params.r <= 0.0:
        raise ValueError("needs r > 0")
    short = params.beta_st * (1.0 - e)
    num = x1 * loans[1].lgd + x2 * loans[2].lgd + short - 1.0
    return max(0.0, num / params.r)


def roe_t0(
    d0: Stage0Decision, tree: ScenarioTree, params: MarketParams
) -> tuple[float, float]:
    """Expected t=1 return on equity and its derivative in e.

    Because the debt claim is proportional to (1-e), the per-unit return is
    (E[R1] - C(1-e))/e with C = 1 + beta_lt*r_d, and its slope in e is
    -(E[R1] - C)/e^2: more equity dilutes whenever E[R1] exceeds C.
    """
    if d0.e <= 0.0:
        raise ValueError("needs e > 0")
    exp_r1 = 0.0
    for node_id in (1, 2, 3):
        node = tree.node_t1(node_id)
        value = sum(
            d0.x[i] * (1.0 - tree.loans[i].lgd if i in node.state.defaulted
                       else 1.0 + tree.loans[i].rate)
            for i in range(3)
        )
        exp_r1 += node.prob_physical * value
    claim_rate = 1.0 + params.beta_lt * params.r_d
    ratio = (exp_r1 - claim_rate * (1.0 - d0.e)) / d0.e
    derivative = -(exp_r1 - claim_rate) / d0.e**2
    return ratio, derivative


def vd_regime(params: MarketParams) -> str:
    """Direction of the equity return in v_d: 'increasing' iff phi_d <= r/(1+r)."""
    return "increasing" if params.phi_d <= params.r / (1.0 + params.r) else "decreasing"


def cap_vd_equityholder(
    ns: NodeState, params: MarketParams, e: float, regime: str
) -> BoundReport:
    """Debt-issuance cap from the equity holder's constraint (no new equity).

    Only binds when phi_d exceeds r/(1+r); below that, extra debt raises the
    equity return and no cap exists.
    """
    margin = params.phi_d - params.r / (1.0 + params.r)
    inputs = {"z1": ns.z1, "z1lt": ns.z1lt, "e": e, "phi_d": params.phi_d,
              "r": params.r, "r_d": params.r_d, "regime": regime}
    if margin <= 0.0:
        return BoundReport("cap_vd_equityholder", math.inf, NOT_APPLICABLE, inputs)
    ltd = _long_claim_t1(params, e)
    if regime == BELOW_TARGET:
        cap = ltd * (params.r - params.r_d) / (1.0 + params.r) / margin
    elif regime == ABOVE_TARGET:
        cap = (ns.z1lt - (1.0 + params.r_e) * e) / margin
    else:
        raise ValueError(f"unknown regime {regime!r}")
    if cap < 0.0:
        return BoundReport("cap_vd_equityholder", cap, NOT_APPLICABLE, inputs)
    return BoundReport("cap_vd_equityholder", cap, regime, inputs)


def cap_vd_leverage(
    ns: NodeState, params: MarketParams, e: float, v_e: float = 0.0
) -> BoundReport:
    """Debt-issuance cap from the leverage floor, at a given equity issuance."""
    ltd = _long_claim_t1(params, e)
    k = params.k_lev
    cap = (
        ns.z1 * (1.0 - k) - ltd + (1.0 - params.phi_e - k) * v_e
    ) / (k + params.phi_d)
    inputs = {"z1": ns.z1, "e": e, "v_e": v_e, "k_lev": k, "phi_d": params.phi_d,
              "phi_e": params.phi_e}
    regime = UNCONDITIONAL if cap >= 0.0 else NOT_APPLICABLE
    return BoundReport("cap_vd_leverage", cap, regime, inputs)


def leverage_vd_monotone(ns: NodeState, params: MarketParams, e: float) -> int:
    """Sign of the leverage ratio's slope in v_d (constant across v_d).

    Negative whenever z1*(1+phi_d) exceeds the accrued long-term claim, i.e.
    for any node where the bank is not already deeply under water.
    """
    num = _long_claim_t1(params, e) - ns.z1 * (1.0 + params.phi_d)
    if num == 0.0:
        return 0
    return 1 if num > 0.0 else -1


def ve_regime(ns: NodeState, params: MarketParams, e: float) -> str:
    """Direction of the equity return in v_e: dilution vs rescue.

    The linear-mode return has slope ((1-phi_e)e - z1lt)/(e+v_e)^2, so it
    decreases iff z1lt >= (1-phi_e)e (new money dilutes a healthy stake) and
    increases otherwise (new money rescues a distressed one).
    """
    return "decreasing" if ns.z1lt >= (1.0 - params.phi_e) * e else "increasing"


def cap_ve_equityholder(
    ns: NodeState, params: MarketParams, e: float, v_d: float, regime: str
) -> BoundReport:
    """Equity-issuance cap from the equity holder's constraint, at a given v_d."""
    ltd = _long_claim_t1(params, e)
    vd_coef = 1.0 - params.phi_d - 1.0 / (1.0 + params.r)
    inputs = {"z1": ns.z1, "z1lt": ns.z1lt, "e": e, "v_d": v_d,
              "phi_e": params.phi_e, "phi_d": params.phi_d, "regime": regime}
    if regime == BELOW_TARGET:
        den = ns.z1 - ltd - e * (1.0 - params.phi_e)
        if den <= 0.0:
            return BoundReport("cap_ve_equityholder", math.inf, NOT_APPLICABLE, inputs)
        num = e * v_d * vd_coef + params.beta_lt * e * (1.0 - e) * (
            1.0 + params.r_d
        ) * (params.r - params.r_d) / (1.0 + params.r)
        cap = num / den
    elif regime == ABOVE_TARGET:
        num = ns.z1lt + v_d * vd_coef - (1.0 + params.r_e) * e
        cap = num / (params.phi_e + params.r_e)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    if cap < 0.0:
        return BoundReport("cap_ve_equityholder", cap, NOT_APPLICABLE, inputs)
    return BoundReport("cap_ve_equityholder", cap, regime, inputs)


def leverage_ve_threshold(ns: NodeState, params: MarketParams, e: float) -> float:
    """Issuance-cost threshold below which new equity raises the leverage ratio.

    The slope of leverage in v_e has the sign of ltd - phi_e*z1, so leverage
    increases iff phi_e <= ltd/z1.
    """
    if ns.z1 == 0.0:
        raise ZeroDivisionError("threshold undefined at z1 = 0")
    return _long_claim_t1(params, e) / ns.z1


def min_ve_for_leverage(ns: NodeState, params: MarketParams, e: float) -> float:
    """Smallest equity issuance restoring the leverage floor with no new debt."""
    ltd = _long_claim_t1(params, e)
    k = params.k_lev
    if ns.z1 > 0.0 and (ns.z1 - ltd) / ns.z1 >= k:
        return 0.0
    if 1.0 - params.phi_e <= k:
        return math.inf
    need = (ltd - (1.0 - k) * ns.z1) / (1.0 - params.phi_e - k)
    return max(0.0, need)


def verify_bound_bruteforce(
    bound: BoundReport,
    constraint_evaluator: Callable[[np.ndarray], np.ndarray],
    step: float,
) -> bool:
    """Scan the constraint on a dense grid and confirm it flips at the cap.

    ``constraint_evaluator`` maps an array of issuance amounts to booleans
    (True = constraint satisfied).  Not-applicable bounds are vacuously true;
    an infinite cap is checked to hold over a wide window.
    """
    if step <= 0.0:
        raise ValueError("needs step > 0")
    if not bound.applicable():
        return True
    cap = bound.cap_value
    if math.isinf(cap):
        vs = np.arange(0.0, 10.0 + step, step)
        return bool(np.all(constraint_evaluator(vs)))
    vs = np.arange(0.0, cap + 10.5 * step, step)
    holds = np.asarray(constraint_evaluator(vs), dtype=bool)
    broken = np.flatnonzero(~holds)
    if broken.size == 0:
        # no violation in the window: the cap is not interior to the scan
        return True
    first = vs[broken[0]]
    return (first >= cap - step) and (first <= cap + step * 1.5 + 1e-15)
