"""
How alpha and beta trade misses for alarms
==========================================

Looser thresholds let more trailing patterns find a past occurrence, so
fewer of them end up as cold starts. The grid below is evaluated in a single
replay of the data.
"""
from thaad import generate_synthetic, sweep

series, truth = generate_synthetic(seed=0, n_entities=8, duration=3 * 1440, anomalies=5)
rows = sweep(series, truth, alphas=[0, 1, 100, 450], beta_multipliers=[1, 3])

print(f"{'alpha':>6} {'beta':>6}  tp  fp  fn")
for r in rows:
    print(f"{r.alpha:6g} {r.beta:6g} {r.result.tp:3d} {r.result.fp:3d} {r.result.fn:3d}")
