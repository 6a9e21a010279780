"""Two-period contagion default tree and per-loan payoff realizations.

The bank holds three loan assets: a safe one (index 0) and two risky ones,
where the less risky loan (index 1) never defaults unless the riskier loan
(index 2) has defaulted too.  That contagion ordering yields exactly three
states at t=1 and six at t=2:

    t=1  node 1: no defaults    node 2: only L2 defaulted   node 3: both
    t=2  node 1 -> leaves 1,2,3   node 2 -> leaves 4,5   node 3 -> leaf 6

A loan pays ``1 + rate`` per period while alive and ``1 - lgd`` once, at the
period in which it defaults; afterwards the position is dead and excluded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import CouplingInfeasible

N_LOANS = 3


@dataclass(frozen=True)
class LoanSpec:
    """Per-loan contract terms and one-period credit parameters.

    rate: per-period interest rate (decimal, e.g. 0.09)
    pd:   per-period default probability in [0, 1]
    lgd:  loss-given-default in [0, 1] (fraction of face lost on default)
    """

    rate: float
    pd: float
    lgd: float

    def __post_init__(self):
        if not self.rate > -1.0:
            raise ValueError(f"loan rate must exceed -1, got {self.rate}")
        if not 0.0 <= self.pd <= 1.0:
            raise ValueError(f"pd must lie in [0,1], got {self.pd}")
        if not 0.0 <= self.lgd <= 1.0:
            raise ValueError(f"lgd must lie in [0,1], got {self.lgd}")


def validate_loans(loans: Sequence[LoanSpec]) -> None:
    """Check the three-loan layout: index 0 riskless, indices 1-2 risky."""
    if len(loans) != N_LOANS:
        raise ValueError(f"expected {N_LOANS} loans, got {len(loans)}")
    safe = loans[0]
    if safe.pd != 0.0 or safe.lgd != 0.0:
        raise ValueError("loan 0 is the safe asset and must have pd = lgd = 0")


@dataclass(frozen=True)
class DefaultState:
    """Which loans are in default at a point in time."""

    defaulted: tuple[bool, bool, bool]

    def __post_init__(self):
        if len(self.defaulted) != N_LOANS:
            raise ValueError("default state needs one flag per loan")
        if self.defaulted[0]:
            raise ValueError("the safe asset never defaults")
        if self.defaulted[1] and not self.defaulted[2]:
            raise ValueError("contagion ordering violated: L1 default requires L2 default")


@dataclass(frozen=True)
class ScenarioNode:
    """One scenario at t=1 or t=2.

    ``prob_physical`` and ``prob_riskneutral`` are the transition
    probabilities of the edge from the parent node.  ``node_id`` follows the
    top-to-bottom numbering of the scenario diagram: 1..3 at t=1, 1..6 at t=2.
    """

    time: int
    node_id: int
    state: DefaultState
    prob_physical: float
    prob_riskneutral: float
    parent: Optional["ScenarioNode"] = None

    @property
    def newly_defaulted(self) -> tuple[bool, ...]:
        """Loans whose default occurred in the period ending at this node."""
        if self.parent is None:
            return self.state.defaulted
        return tuple(
            d and not p
            for d, p in zip(self.state.defaulted, self.parent.state.defaulted)
        )

    def survivors(self) -> tuple[int, ...]:
        return tuple(i for i, d in enumerate(self.state.defaulted) if not d)

    def path_prob_physical(self) -> float:
        p = self.prob_physical
        if self.parent is not None:
            p *= self.parent.path_prob_physical()
        return p

    def path_prob_riskneutral(self) -> float:
        p = self.prob_riskneutral
        if self.parent is not None:
            p *= self.parent.path_prob_riskneutral()
        return p


@dataclass(frozen=True)
class CouplingRule:
    """Joint default law built on the nested (comonotone) coupling.

    Marginals per period are the loans' ``pd`` values; the joint law puts
    P(both default) = pd1, P(only L2) = pd2 - pd1, P(none) = 1 - pd2.
    Defaults are i.i.d. across periods conditional on survival; the optional
    ``pd_second`` pair overrides the per-loan default probabilities used for
    the second period (the stationary choice is the default).
    """

    pd_second: Optional[tuple[float, float]] = None

    def second_period_pds(self, loans: Sequence[LoanSpec]) -> tuple[float, float]:
        if self.pd_second is not None:
            return self.pd_second
        return (loans[1].pd, loans[2].pd)


@dataclass(frozen=True)
class ScenarioTree:
    """Immutable two-period tree: 3 nodes at t=1, 6 leaves at t=2."""

    loans: tuple[LoanSpec, LoanSpec, LoanSpec]
    t1_nodes: tuple[ScenarioNode, ScenarioNode, ScenarioNode]
    t2_nodes: tuple[ScenarioNode, ...]
    riskneutral_pds: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def children(self, node: ScenarioNode) -> tuple[ScenarioNode, ...]:
        return tuple(n for n in self.t2_nodes if n.parent is node)

    def node_t1(self, node_id: int) -> ScenarioNode:
        return self.t1_nodes[node_id - 1]


def _nested_transition(p1: float, p2: float) -> tuple[float, float, float]:
    """(no default, only L2, both) probabilities for one period."""
    if p2 < p1:
        raise CouplingInfeasible(
            f"nested coupling needs pd2 >= pd1, got pd1={p1}, pd2={p2}"
        )
    return (1.0 - p2, p2 - p1, p1)


_STATE_NONE = DefaultState((False, False, False))
_STATE_L2 = DefaultState((False, False, True))
_STATE_BOTH = DefaultState((False, True, True))


def loan_realization(loan: LoanSpec, defaulted_this_period: bool) -> float:
    """Gross value of one unit of face over one period."""
    return 1.0 - loan.lgd if defaulted_this_period else 1.0 + loan.rate


def build_tree(
    loans: Sequence[LoanSpec],
    coupling: CouplingRule = CouplingRule(),
    riskneutral_pds: Optional[Sequence[float]] = None,
) -> ScenarioTree:
    """Build the contagion tree with physical (and optional risk-neutral) edges.

    ``riskneutral_pds`` are per-loan one-period default probabilities under
    the pricing measure; when omitted the risk-neutral edge probabilities
    duplicate the physical ones.
    """
    validate_loans(loans)
    loans = tuple(loans)
    p1, p2 = loans[1].pd, loans[2].pd
    trans_p = _nested_transition(p1, p2)
    if riskneutral_pds is None:
        q1, q2 = p1, p2
    else:
        q1, q2 = riskneutral_pds[1], riskneutral_pds[2]
    trans_q = _nested_transition(q1, q2)

    states = (_STATE_NONE, _STATE_L2, _STATE_BOTH)
    t1 = tuple(
        ScenarioNode(time=1, node_id=i + 1, state=states[i],
                     prob_physical=trans_p[i], prob_riskneutral=trans_q[i])
        for i in range(3)
    )

    p1b, p2b = coupling.second_period_pds(loans)
    trans_p2 = _nested_transition(p1b, p2b)
    # Second-period risk-neutral probabilities stay at the calibrated q's.
    t2: list[ScenarioNode] = []
    # Node 1: both risky loans alive, all three patterns possible.
    for j in range(3):
        t2.append(ScenarioNode(time=2, node_id=j + 1, state=states[j],
                               prob_physical=trans_p2[j],
                               prob_riskneutral=trans_q[j], parent=t1[0]))
    # Node 2: only L1 alive; it survives or defaults (L2 stays defaulted).
    t2.append(ScenarioNode(time=2, node_id=4, state=_STATE_L2,
                           prob_physical=1.0 - p1b, prob_riskneutral=1.0 - q1,
                           parent=t1[1]))
    t2.append(ScenarioNode(time=2, node_id=5, state=_STATE_BOTH,
                           prob_physical=p1b, prob_riskneutral=q1,
                           parent=t1[1]))
    # Node 3: nothing left to default.
    t2.append(ScenarioNode(time=2, node_id=6, state=_STATE_BOTH,
                           prob_physical=1.0, prob_riskneutral=1.0,
                           parent=t1[2]))
    return ScenarioTree(loans=loans, t1_nodes=t1, t2_nodes=tuple(t2),
                        riskneutral_pds=(0.0, q1, q2))


def realization_factor(tree: ScenarioTree, node: ScenarioNode, i: int) -> float:
    """Cumulative gross value at ``node`` of one unit of loan ``i`` held from t=0.

    Recovery is paid at the default period; afterwards the position is
    excluded, so a loan already dead before the period contributes 0 here.
    """
    loan = tree.loans[i]
    if node.time == 1:
        return loan_realization(loan, node.state.defaulted[i])
    parent = node.parent
    assert parent is not None
    if parent.state.defaulted[i]:
        return 0.0  # recovery was paid at t=1
    first = loan_realization(loan, False)
    return first * loan_realization(loan, node.newly_defaulted[i])


def portfolio_value(x: Sequence[float], node: ScenarioNode, tree: ScenarioTree) -> float:
    """Value of positions ``x`` (units of face) at the given node.

    At t=1 every loan contributes its one-period realization (recovery for
    fresh defaults).  At t=2, loans that defaulted at t=1 are excluded: their
    recovery was paid out one period earlier.
    """
    return sum(x[i] * realization_factor(tree, node, i) for i in range(N_LOANS))
