"""
Predicting the transient from the wave speeds
==============================================

First peak A1 = N/|c+|, half-period T = N (1/|c+| + 1/|c-|) and peak ratio
|c-|/|c+|.  The prediction is asymptotic in N; the measured errors shrink
as the platoon grows.
"""
from platoonwave import PlatoonParams
from platoonwave.harness import run_verify

p = PlatoonParams(1, friction=2.0, gain_x=6.2, gain_v=10.0, asym_x=0.5, asym_v=0.4)
rows = run_verify(p, [40, 80, 160])

print(f"{'N':>4} {'quantity':>8} {'predicted':>11} {'measured':>11} {'log10 rel err':>14}")
for r in rows:
    print(f"{r['N']:4d} {r['chi']:>8} {r['pred']:11.4f} {r['meas']:11.4f} {r['theta']:14.3f}")
