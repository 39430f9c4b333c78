"""
Corridor workflow
=================

Four weeks of synthetic queue lengths with weekday rush hours: daily
(alpha, Q) pairs from 07:00, their correlation, and the sliding alpha(t)
trace split by day type.
"""

import numpy as np

from queuefractal import (CongestionConfig, CorridorSpec, alpha_t, classify_trace, correlate,
                          daily_pairs, gen_corridor, q_trace)

spec = CorridorSpec(n_days=28, seed=4)
(x,) = gen_corridor(spec)
print(x.label, len(x), "samples from", x.t0)

pairs = daily_pairs(x, CongestionConfig(spec.capacity, 0.6))
for p in list(pairs)[:7]:
    print(f"{p.date}  {p.day_type:8s}  alpha={p.alpha:.3f}  Q={p.q}")

rep = correlate(pairs)
print("r(alpha, Q):", {k: None if v is None else round(v, 3)
                       for k, v in rep.to_dict().items() if k.startswith("r_")})

wd = np.mean([p.alpha for p in pairs if p.day_type == "weekday"])
we = np.mean([p.alpha for p in pairs if p.day_type == "weekend"])
print(f"mean alpha weekday={wd:.3f} weekend={we:.3f}")

# alpha(t) every 30 minutes, with Q over the same windows at half capacity
trace = alpha_t(x, step=15, workers=4)
q = q_trace(x, trace, CongestionConfig(spec.capacity, 0.5))
summary = classify_trace(trace, q)
for kind in ("weekday", "weekend"):
    s = summary[kind]
    print(f"{kind}: n={s['n']}  mean alpha={s['alpha_mean']:.3f}  "
          f"alpha>1 {s['frac_alpha_gt_1']:.0%}  in [1, 1.3] {s['brownian_fraction']:.0%}")
