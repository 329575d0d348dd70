"""Relaying target range and bearing from an observer to a blind teammate."""

import numpy as np

from salvoguide import CommGraph, RelayObservation, consensus_terminal, contains_spanning_tree, relay_target_info

# 3-4-5 triangle: observer at the origin, target 4 km up, teammate 3 km to the right
obs = RelayObservation(observer_id=0, V_T=1.0, R_i=4.0, lam_i=np.pi / 2, r_ij=3.0, alpha=0.0)
R_j, lam_j = relay_target_info(obs)
print(f"relayed range {R_j:.12f} km, bearing {lam_j:.12f} rad (expect 5 and {np.arctan2(4, -3):.12f})")

# weights N/(N-1) on the complete graph leave an equal terminal unchanged
g = CommGraph.complete(4, 4 / 3)
print("spanning tree:", contains_spanning_tree(g))
print("consensus of [0.01]*4:", consensus_terminal(g, [0.01] * 4))
print("unit weights instead:", consensus_terminal(CommGraph.complete(4), [0.01] * 4))
