"""Walk through the default scenario tree and the two probability measures.

The bank lends to a safe borrower and two risky ones with a contagion
ordering: the mid-risk loan only defaults if the high-risk loan has defaulted
too.  That collapses the joint default law to three states after one period
and six after two.  This script builds the tree, prints both the physical
and the calibrated risk-neutral transition probabilities, and shows the
cumulative payoff factor of each loan along every path.
"""

from bankplan import config
from bankplan.scenario import realization_factor

cfg = config.example1()
tree = cfg.tree()

print("loans: rate / pd / lgd")
for i, ln in enumerate(cfg.loans):
    print(f"  L{i}: {ln.rate:6.3f} / {ln.pd:5.3f} / {ln.lgd:5.3f}")

print("\ncalibrated risk-neutral default probabilities:")
print("  q =", tuple(round(q, 6) for q in tree.riskneutral_pds))

print("\nstates after one period (P = physical, Q = pricing measure):")
for node in tree.t1_nodes:
    dead = [f"L{i}" for i, d in enumerate(node.state.defaulted) if d]
    label = ", ".join(dead) if dead else "none"
    print(f"  node {node.node_id}: defaulted = {label:8s} "
          f"P = {node.prob_physical:.3f}  Q = {node.prob_riskneutral:.6f}")

print("\nleaves after two periods, with cumulative payoff factors per loan:")
for leaf in tree.t2_nodes:
    facts = [realization_factor(tree, leaf, i) for i in range(3)]
    print(f"  leaf {leaf.node_id} (from node {leaf.parent.node_id}): "
          f"path P = {leaf.path_prob_physical():.4f}  "
          f"factors = ({facts[0]:.4f}, {facts[1]:.4f}, {facts[2]:.4f})")

print("\nA factor of 0 marks a loan that defaulted in the first period: its")
print("recovery was paid out then, so it contributes nothing at the horizon.")
