"""Closed-form issuance bounds, checked against brute-force scans.

Every cap on new equity and new debt at an intermediate scenario has a
closed form: how much debt the leverage floor tolerates, how much equity
the shareholders tolerate, the minimum equity injection that restores the
leverage floor, and the cost thresholds that flip each quantity between
increasing and decreasing in the issuance amount.  This script evaluates
them all at each scenario of the wide-cap setup and verifies each cap by
scanning the underlying constraint at a 1e-5 step.
"""

import math

import numpy as np

from bankplan import bounds as B
from bankplan import config
from bankplan.cli import node_bounds
from bankplan.stage0 import Stage0Decision
from bankplan.stage1 import node_state

cfg = config.example2()
tree = cfg.tree()
params = cfg.params
d0 = Stage0Decision(x=tuple(cfg.stage0_reference["x"]),
                    e=cfg.stage0_reference["e"])

print(f"debt-cost regime: equity return is {B.vd_regime(params)} in new debt")
print(f"(threshold phi_d <= r/(1+r) = {params.r / (1 + params.r):.6f}, "
      f"phi_d = {params.phi_d})\n")

for node_id in (1, 2, 3):
    ns = node_state(d0, tree.node_t1(node_id), tree, params)
    print(f"node {node_id}: z1 = {ns.z1:.4f}, "
          f"equity regime: {B.ve_regime(ns, params, d0.e)} in new equity")
    for bound, verified in node_bounds(ns, d0, params):
        cap = "unbounded" if math.isinf(bound.cap_value) else f"{bound.cap_value:.6f}"
        print(f"   {bound.name:24s} cap = {cap:>10s}  regime = {bound.regime:13s}"
              f"  scan-verified = {verified}")
    # the joint debt cap grows with the amount of equity issued alongside
    caps = [B.cap_vd_leverage(ns, params, d0.e, v_e=v).cap_value
            for v in np.linspace(0.0, params.cap_e, 4)]
    pretty = ", ".join(f"{c:.4f}" for c in caps)
    print(f"   debt cap as equity issuance grows 0 -> {params.cap_e}: {pretty}")
    print()
