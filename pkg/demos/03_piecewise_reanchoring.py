"""Piecewise re-anchoring: gains are recomputed from the measured state at each segment start."""

import numpy as np

from salvoguide import example2, run_scenario

for segments in (1, 2, 4):
    cfg = example2(law="piecewise", segments=segments, Rf=[1.0] * 4, Vlamf=[0.05] * 4)
    tr = run_scenario(cfg)
    starts = [round(s["t_start"], 3) for s in tr.segments]
    print(f"{segments} segment(s): {tr.status:9s} starts {starts} "
          f"terminal spread {np.ptp(tr.R[-1]):.2e} km")

# literal per-segment consensus terminals can demand growth that an exponential cannot deliver
tr = run_scenario(example2(law="piecewise", segments=4, piecewise_terminal="consensus"))
print("consensus terminals:", tr.status, *tr.diagnostics)
