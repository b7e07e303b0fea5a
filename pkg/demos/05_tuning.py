"""
Choosing the gains
==================

The N-independent factor of the total error is minimised over (gx, gv, rho_v)
with a safety margin eps on the velocity-asymmetry bound.  The sweeps then
show how the design degrades when the friction drops or rho_v moves.
"""
import numpy as np

from platoonwave import OptimizationProblem, PlatoonParams, optimize
from platoonwave.harness import critical_friction, run_sweep_asym, run_sweep_friction

for eps in (0.1, 0.0):
    res = optimize(OptimizationProblem(2.0, gain_upper=10.0, epsilon=eps))
    print(f"eps = {eps}: gx = {res.gain_x:.4f}, gv = {res.gain_v:.4f}, rho_v = {res.asym_v:.4f}, "
          f"criterion = {res.criterion:.5f}, active = {res.active_constraints}")

a_star = critical_friction(6.2, 10.0, 0.2)
print(f"\nthe tuned design loses circular stability below a* = {a_star:.4f}")

# smaller platoons than a full study so the script runs in seconds
base = PlatoonParams(100, friction=2.0, gain_x=6.2, gain_v=10.0, asym_x=0.5, asym_v=0.4)
sweep = run_sweep_friction(base, np.arange(1.4, 2.81, 0.2))
print("\n   a      margin        theta")
for r in sweep["rows"]:
    print(f"{r['a']:5.2f} {r['margin']:+10.4f} {r['theta']:12.4g}")

sweep = run_sweep_asym(base.with_(gain_x=8.3), [0.34, 0.36, 0.37, 0.38, 0.40, 0.44, 0.49])
print("\nrho_v        theta  beyond bound")
for r in sweep["rows"]:
    print(f"{r['rho_v']:5.2f} {r['theta']:12.4g}  {r['beyond_bound']}")
print(f"argmin rho_v = {sweep['argmin']}")
