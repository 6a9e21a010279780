"""Per-node rebalancing, liquidation, and issuance problem at t=1.

Given the t=0 decision and a realized t=1 scenario, the bank chooses new
positions over the surviving loans plus new equity v_e and new debt v_d,
maximizing the expected t=2 payoff net of issuance costs, subject to the
budget identity, the leverage-ratio floor, the equity holder's constraint,
the risk cap, and the issuance caps.  Bankruptcy (an empty feasible region)
is a valid outcome, not an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import measures
from .errors import Infeasible
from .measures import MarketParams
from .optimizer import OptimizerConfig, de_optimize, grid_oracle
from .scenario import LoanSpec, ScenarioNode, ScenarioTree, realization_factor
from .stage0 import Stage0Decision, debt_claim_t1

BUDGET_TOL = 1e-9
CONSTRAINT_TOL = 1e-9

LINEAR = "linearized"
EXACT = "exact_positive_part"


@dataclass(frozen=True)
class NodeState:
    """Realized balance-sheet quantities at one t=1 node.

    z1 is the portfolio realization net of the short-term claim; z1lt
    additionally nets out the discounted long-term claim, i.e. the
    discounted equity value before any new issuance.
    """

    node: ScenarioNode
    r1: float
    z1: float
    z1lt: float
    survivors: tuple[int, ...]
    prices: tuple[float, float, float]  # one-period realizations L_i at t=1


@dataclass(frozen=True)
class Stage1Decision:
    """Post-rebalance positions (units of face, zero for dead loans) and issuance."""

    x1: tuple[float, float, float]
    v_e: float
    v_d: float


@dataclass
class Stage1Report:
    decision: Stage1Decision
    objective: float
    leverage: float
    risk: float
    v_equity: float
    equity_threshold: float
    budget_gap: float
    binding_constraints: list[str]
    slacks: dict[str, float]
    notes: list[str] = field(default_factory=list)


@dataclass
class Bankrupt:
    """Empty feasible region at a node: the bank liquidates and fails."""

    node_id: int
    reason: str
    min_equity_needed: float
    equity_cap: float


Stage1Outcome = Union[Stage1Report, Bankrupt]


def node_state(
    d0: Stage0Decision,
    node: ScenarioNode,
    tree: ScenarioTree,
    params: MarketParams,
) -> NodeState:
    """Evaluate the t=0 portfolio at a t=1 node and net out the debt claims."""
    if node.time != 1:
        raise ValueError("node_state is defined at t=1 nodes")
    prices = tuple(realization_factor(tree, node, i) for i in range(3))
    r1 = float(np.dot(d0.x, prices))
    short, long_face = debt_claim_t1(d0, params)
    z1 = r1 - short
    # long_face carries principal only; the t=2 claim is long_face*(1+r_d)^2.
    z1lt = z1 - long_face * (1.0 + params.r_d) ** 2 / (1.0 + params.r)
    return NodeState(node=node, r1=r1, z1=z1, z1lt=z1lt,
                     survivors=node.survivors(), prices=prices)


def _claims(d0: Stage0Decision, params: MarketParams) -> tuple[float, float, float]:
    """(ST due at t=1, LT face accrued to t=1, LT claim at t=2)."""
    short, long_face = debt_claim_t1(d0, params)
    return short, long_face * (1.0 + params.r_d), long_face * (1.0 + params.r_d) ** 2


def budget_gap(
    ns: NodeState,
    d0: Stage0Decision,
    d1: Stage1Decision,
    params: MarketParams,
) -> float:
    """Signed mismatch of the t=1 budget identity (0 when it holds).

    Purchases (surviving loans only) plus the short-term claim must equal
    sales at the same t=1 prices plus issuance proceeds net of costs.
    """
    short, _, _ = _claims(d0, params)
    purchases = sum(
        max(d1.x1[i] - d0.x[i], 0.0) * ns.prices[i] for i in ns.survivors
    )
    sales = sum(max(d0.x[i] - d1.x1[i], 0.0) * ns.prices[i] for i in range(3))
    raised = (1.0 - params.phi_e) * d1.v_e + (1.0 - params.phi_d) * d1.v_d
    return purchases + short - (sales + raised)


def wealth_after_issuance(ns: NodeState, d1_v_e: float, d1_v_d: float,
                          params: MarketParams) -> float:
    """Cash available for the new portfolio once ST debt is paid."""
    return ns.z1 + (1.0 - params.phi_e) * d1_v_e + (1.0 - params.phi_d) * d1_v_d


def leverage_t1(ns: NodeState, d1: Stage1Decision, params: MarketParams,
                e: float) -> float:
    """Leverage ratio after issuing v_e and v_d at a t=1 node."""
    long_t1 = params.beta_lt * (1.0 - e) * (1.0 + params.r_d)
    assets = ns.z1 + d1.v_d + d1.v_e
    if assets == 0.0:
        raise ZeroDivisionError("leverage undefined: zero post-issuance exposure")
    capital = (
        ns.z1
        + (1.0 - params.phi_e) * d1.v_e
        + (1.0 - params.phi_d) * d1.v_d
        - d1.v_d
        - long_t1
    )
    return capital / assets


def expected_t2_payoff(
    d1: Stage1Decision,
    ns: NodeState,
    tree: ScenarioTree,
    measure: str = "physical",
) -> float:
    """E[sum_i x1_i * L_i(t=2) * 1{alive past t=1}] over the node's children."""
    total = 0.0
    for child in tree.children(ns.node):
        p = child.prob_physical if measure == "physical" else child.prob_riskneutral
        value = sum(
            d1.x1[i] * realization_factor(tree, child, i) for i in ns.survivors
        )
        total += p * value
    return total


def v_equity(
    ns: NodeState,
    d0: Stage0Decision,
    d1: Stage1Decision,
    params: MarketParams,
    mode: str = LINEAR,
    tree: Optional[ScenarioTree] = None,
) -> float:
    """Expected discounted return per unit of equity after issuance.

    ``linearized`` drops the positive part (valid when every t=2
    payoff net of claims is nonnegative) and reduces to a closed form in
    (v_e, v_d); ``exact_positive_part`` prices the clipped payoff under the
    risk-neutral edge probabilities of ``tree``.
    """
    e = d0.e
    if e + d1.v_e <= 0.0:
        raise ValueError("v_equity needs e + v_e > 0")
    if mode == LINEAR:
        _, _, long_t2 = _claims(d0, params)
        num = (
            ns.z1
            + (1.0 - params.phi_e) * d1.v_e
            + (1.0 - params.phi_d) * d1.v_d
            - (d1.v_d + long_t2) / (1.0 + params.r)
        )
        return num / (e + d1.v_e)
    if mode == EXACT:
        if tree is None:
            raise ValueError("exact mode needs the scenario tree")
        _, _, long_t2 = _claims(d0, params)
        expectation = 0.0
        for child in tree.children(ns.node):
            value = sum(
                d1.x1[i] * realization_factor(tree, child, i) for i in ns.survivors
            )
            expectation += child.prob_riskneutral * max(value - d1.v_d - long_t2, 0.0)
        return expectation / (1.0 + params.r) / (e + d1.v_e)
    raise ValueError(f"unknown v_equity mode {mode!r}")


def current_equity_return(ns: NodeState, d0: Stage0Decision,
                          params: MarketParams) -> float:
    """Return on the existing stake if liquidated now: (R1 - Debt)+ / e."""
    short, long_t1, _ = _claims(d0, params)
    return max(ns.r1 - short - long_t1, 0.0) / d0.e


def equity_threshold(ns: NodeState, d0: Stage0Decision,
                     params: MarketParams) -> float:
    """min(target growth factor, current return) from the equity holder's constraint."""
    return min(1.0 + params.r_e, current_equity_return(ns, d0, params))


def equity_holder_ok(
    ns: NodeState,
    d0: Stage0Decision,
    d1: Stage1Decision,
    params: MarketParams,
    tree: ScenarioTree,
    tol: float = CONSTRAINT_TOL,
) -> bool:
    """Both inequalities of the equity holder's constraint."""
    threshold = equity_threshold(ns, d0, params)
    if threshold < 0.0:
        return False
    return v_equity(ns, d0, d1, params, mode=EXACT, tree=tree) >= threshold - tol


# --- solver -----------------------------------------------------------------

def _decision_from_point(
    p: np.ndarray, ns: NodeState, params: MarketParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Map DE points (risky cash fractions..., v_e, v_d) to position arrays.

    The budget identity is eliminated: the safe-asset position absorbs
    whatever wealth the risky survivor fractions leave unspent.  Returns
    (x1 rows, v_e, v_d, structural violation).
    """
    risky = [i for i in ns.survivors if i != 0]
    k = len(risky)
    v_e, v_d = p[:, k], p[:, k + 1]
    wealth = ns.z1 + (1.0 - params.phi_e) * v_e + (1.0 - params.phi_d) * v_d
    x1 = np.zeros((len(p), 3))
    spent = np.zeros(len(p))
    for j, i in enumerate(risky):
        cash = p[:, j] * np.clip(wealth, 0.0, None)
        x1[:, i] = cash / ns.prices[i]
        spent += p[:, j]
    structural = np.clip(spent - 1.0, 0.0, None) + np.clip(-wealth, 0.0, None)
    x1[:, 0] = np.clip(wealth, 0.0, None) * np.clip(1.0 - spent, 0.0, None) / ns.prices[0]
    return x1, v_e, v_d, structural


def _batch_constraints(
    x1: np.ndarray,
    v_e: np.ndarray,
    v_d: np.ndarray,
    ns: NodeState,
    d0: Stage0Decision,
    params: MarketParams,
    tree: ScenarioTree,
) -> np.ndarray:
    """Total violation of leverage, risk, and equity-holder constraints."""
    _, long_t1, long_t2 = _claims(d0, params)
    assets = ns.z1 + v_d + v_e
    capital = (
        ns.z1 + (1.0 - params.phi_e) * v_e + (1.0 - params.phi_d) * v_d
        - v_d - long_t1
    )
    lev = np.where(assets > 0.0, capital / np.where(assets == 0.0, 1.0, assets), -np.inf)
    viol = np.clip(params.k_lev - lev, 0.0, None)

    rho_each = np.array([ln.pd * ln.lgd for ln in tree.loans])
    viol += np.clip(x1 @ rho_each - params.theta2, 0.0, None)

    threshold = equity_threshold(ns, d0, params)
    expectation = np.zeros(len(x1))
    for child in tree.children(ns.node):
        value = np.zeros(len(x1))
        for i in ns.survivors:
            value += x1[:, i] * realization_factor(tree, child, i)
        expectation += child.prob_riskneutral * np.clip(value - v_d - long_t2, 0.0, None)
    v_eq = expectation / (1.0 + params.r) / (d0.e + v_e)
    viol += np.clip(threshold - v_eq, 0.0, None)
    viol[viol <= CONSTRAINT_TOL] = 0.0
    return viol


def _batch_objective(
    x1: np.ndarray, v_e: np.ndarray, v_d: np.ndarray,
    ns: NodeState, params: MarketParams, tree: ScenarioTree,
) -> np.ndarray:
    expectation = np.zeros(len(x1))
    for child in tree.children(ns.node):
        value = np.zeros(len(x1))
        for i in ns.survivors:
            value += x1[:, i] * realization_factor(tree, child, i)
        expectation += child.prob_physical * value
    return expectation - params.phi_d * v_d - params.phi_e * v_e


def solve_t1(
    ns: NodeState,
    d0: Stage0Decision,
    params: MarketParams,
    tree: ScenarioTree,
    config: OptimizerConfig,
    grid_steps: tuple[float, float] = (0.02, 0.005),
) -> Stage1Outcome:
    """Solve the node problem; returns ``Bankrupt`` on an empty feasible region.

    Bankruptcy is declared only after the optimizer's grid-seeded fallback
    finds no feasible point and the analytical minimal-equity test confirms
    the leverage floor is out of reach within the issuance cap.
    """
    from . import bounds as bounds_mod

    risky = [i for i in ns.survivors if i != 0]
    k = len(risky)
    box = [(0.0, 1.0)] * k + [(0.0, params.cap_e), (0.0, params.cap_d)]

    def obj(p: np.ndarray) -> np.ndarray:
        x1, v_e, v_d, _ = _decision_from_point(p, ns, params)
        return _batch_objective(x1, v_e, v_d, ns, params, tree)

    def viol(p: np.ndarray) -> np.ndarray:
        x1, v_e, v_d, structural = _decision_from_point(p, ns, params)
        return structural + _batch_constraints(x1, v_e, v_d, ns, d0, params, tree)

    seeds = _seed_points_t1(k, params)
    try:
        result = de_optimize(obj, viol, box, config, seeds=seeds)
    except Infeasible:
        min_ve = bounds_mod.min_ve_for_leverage(ns, params, d0.e)
        if min_ve > params.cap_e:
            return Bankrupt(
                node_id=ns.node.node_id,
                reason=(
                    f"leverage floor {params.k_lev:.4f} needs v_e >= {min_ve:.4f} "
                    f"but the equity cap is {params.cap_e:.4f}"
                ),
                min_equity_needed=min_ve,
                equity_cap=params.cap_e,
            )
        return Bankrupt(
            node_id=ns.node.node_id,
            reason="no feasible point found by optimizer or grid fallback",
            min_equity_needed=min_ve,
            equity_cap=params.cap_e,
        )

    point = np.asarray([result.point])
    x1, v_e, v_d, _ = _decision_from_point(point, ns, params)
    decision = Stage1Decision(
        x1=tuple(float(v) for v in x1[0]), v_e=float(v_e[0]), v_d=float(v_d[0])
    )
    return _build_report(decision, ns, d0, params, tree)


def _seed_points_t1(k: int, params: MarketParams) -> np.ndarray:
    fracs = [0.0, 0.25, 0.5, 0.75, 1.0]
    pts = []
    for ve in (0.0, params.cap_e / 2.0, params.cap_e):
        for vd in (0.0, params.cap_d / 2.0, params.cap_d):
            if k == 0:
                pts.append((ve, vd))
            elif k == 1:
                pts.extend((f, ve, vd) for f in fracs)
            else:
                pts.extend(
                    (f1, f2, ve, vd)
                    for f1 in fracs for f2 in fracs if f1 + f2 <= 1.0
                )
    return np.asarray(pts)


def _build_report(
    decision: Stage1Decision,
    ns: NodeState,
    d0: Stage0Decision,
    params: MarketParams,
    tree: ScenarioTree,
) -> Stage1Report:
    lev = leverage_t1(ns, decision, params, d0.e)
    risk = measures.rho(decision.x1, tree.loans)
    v_eq = v_equity(ns, d0, decision, params, mode=EXACT, tree=tree)
    threshold = equity_threshold(ns, d0, params)
    slacks = {
        "leverage": lev - params.k_lev,
        "risk_cap": params.theta2 - risk,
        "equity_holder": v_eq - threshold,
        "equity_cap": params.cap_e - decision.v_e,
        "debt_cap": params.cap_d - decision.v_d,
        "budget": -abs(budget_gap(ns, d0, decision, params)),
    }
    binding = [name for name, s in slacks.items() if abs(s) <= 1e-6]
    return Stage1Report(
        decision=decision,
        objective=float(
            expected_t2_payoff(decision, ns, tree)
            - params.phi_d * decision.v_d
            - params.phi_e * decision.v_e
        ),
        leverage=lev,
        risk=risk,
        v_equity=v_eq,
        equity_threshold=threshold,
        budget_gap=budget_gap(ns, d0, decision, params),
        binding_constraints=binding,
        slacks=slacks,
    )


def grid_solve_t1(
    ns: NodeState,
    d0: Stage0Decision,
    params: MarketParams,
    tree: ScenarioTree,
    frac_step: float = 0.005,
    v_step: float = 0.001,
    budget: float = 1e8,
) -> tuple[Stage1Decision, float]:
    """Dense-grid oracle over (risky fractions, v_e, v_d)."""
    risky = [i for i in ns.survivors if i != 0]
    k = len(risky)

    def obj(p: np.ndarray) -> np.ndarray:
        x1, v_e, v_d, _ = _decision_from_point(p, ns, params)
        return _batch_objective(x1, v_e, v_d, ns, params, tree)

    def viol(p: np.ndarray) -> np.ndarray:
        x1, v_e, v_d, structural = _decision_from_point(p, ns, params)
        return structural + _batch_constraints(x1, v_e, v_d, ns, d0, params, tree)

    point, objective = grid_oracle(
        obj, viol,
        bounds=[(0.0, 1.0)] * k + [(0.0, params.cap_e), (0.0, params.cap_d)],
        steps=[frac_step] * k + [v_step, v_step],
        budget=budget,
    )
    x1, v_e, v_d, _ = _decision_from_point(np.asarray([point]), ns, params)
    decision = Stage1Decision(
        x1=tuple(float(v) for v in x1[0]), v_e=float(v_e[0]), v_d=float(v_d[0])
    )
    return decision, objective
