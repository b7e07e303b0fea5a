"""
Total spacing error and how it grows with N
============================================

Symmetric coupling gives a long, barely damped transient.  The same
asymmetry in both position and velocity gives exponential growth.
Asymmetry in velocity only gives a total error cubic in N, close to the
closed-form estimate.
"""
import numpy as np

from platoonwave.harness import run_compare_strategies, run_scaling

print("leader step, N = 100")
for name, res in run_compare_strategies(n=100).items():
    s = res["summary"]
    print(f"  {name:22s} max |e| = {s['max_overshoot']:10.3g}   theta = {s['theta']:10.3g}")

n_list = [25, 50, 100, 200]
rows = run_scaling(n_list)
series = {}
for r in rows:
    series.setdefault(r["series"], []).append(r["theta"])

print("\ntotal absolute error theta(N)")
print("  " + " ".join(f"{'N=' + str(n):>11}" for n in n_list) + "  series")
for name, values in series.items():
    print("  " + " ".join(f"{v:11.3e}" for v in values) + f"  {name}")

n = np.array(n_list, dtype=float)
slope = np.polyfit(np.log(n[1:]), np.log(series["velocity-only"][1:]), 1)[0]
print(f"\nvelocity-only log-log slope over N = 50..200: {slope:.3f}")
