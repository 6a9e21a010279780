"""Three-time-step bank portfolio planning under leverage and risk limits."""

from .errors import (
    BankplanError,
    BudgetExceeded,
    CalibrationInfeasible,
    ConfigError,
    CouplingInfeasible,
    DomainError,
    Infeasible,
)
from .measures import (
    MarketParams,
    RiskNeutralWeights,
    calibrate_q,
    irb_capital,
    irb_capital_single,
    leverage_ratio,
    rho,
)
from .optimizer import DEResult, OptimizerConfig, de_optimize, grid_oracle
from .scenario import (
    CouplingRule,
    DefaultState,
    LoanSpec,
    ScenarioNode,
    ScenarioTree,
    build_tree,
    loan_realization,
    portfolio_value,
    realization_factor,
)
from .stage0 import Stage0Decision, Stage0Report, grid_solve_t0, solve_t0
from .stage1 import (
    Bankrupt,
    NodeState,
    Stage1Decision,
    Stage1Report,
    budget_gap,
    leverage_t1,
    node_state,
    solve_t1,
    v_equity,
)
from . import bounds, config

__version__ = "1.0.0"
