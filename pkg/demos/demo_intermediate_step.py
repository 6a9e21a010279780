"""Rebalance the book at each intermediate scenario, or fail trying.

After one period the t=0 portfolio has paid off (or defaulted) and the
short-term debt is due.  At each of the three scenarios the bank re-solves:
it may sell positions, buy into surviving loans, and issue new equity and
debt (both costly, both capped), subject to the leverage floor, the risk
cap, and the requirement that existing shareholders are not diluted below
their alternatives.

Under the tight caps of the first setup the worst scenario is hopeless: no
admissible issuance restores the leverage floor, and the bank fails there.
With wider caps (second setup) all three scenarios survive.
"""

from bankplan import config
from bankplan.stage0 import Stage0Decision
from bankplan.stage1 import Bankrupt, node_state, solve_t1

for cfg in (config.example1(), config.example2()):
    tree = cfg.tree()
    d0 = Stage0Decision(x=tuple(cfg.stage0_reference["x"]),
                        e=cfg.stage0_reference["e"])
    print(f"=== {cfg.name}: short-term share {cfg.params.beta_st}, "
          f"caps v_e <= {cfg.params.cap_e}, v_d <= {cfg.params.cap_d}")
    for node_id in (1, 2, 3):
        ns = node_state(d0, tree.node_t1(node_id), tree, cfg.params)
        out = solve_t1(ns, d0, cfg.params, tree, cfg.optimizer)
        print(f" node {node_id}: wealth after short-term debt z1 = {ns.z1:.4f}")
        if isinstance(out, Bankrupt):
            print(f"   BANKRUPT: {out.reason}")
            continue
        d1 = out.decision
        print(f"   positions (units of face): safe {d1.x1[0]:.4f}, "
              f"mid {d1.x1[1]:.4f}, high {d1.x1[2]:.4f}")
        print(f"   issuance: equity {d1.v_e:.4f}, debt {d1.v_d:.4f}")
        print(f"   leverage {out.leverage:.4f}, expected loss {out.risk:.5f}, "
              f"equity return {out.v_equity:.4f} "
              f"(threshold {out.equity_threshold:.4f})")
        print(f"   binding constraints: {out.binding_constraints}")
    print()
