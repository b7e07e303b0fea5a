"""
A leader step and the wave it sends down the platoon
=====================================================

The leader starts moving at unit speed while the followers are still at
rest.  The disturbance travels to the tail, bounces back and repeats with a
smaller amplitude each time.
"""
import numpy as np

from platoonwave import PlatoonParams, predict_transient, signal_velocities, simulate_leader_step

# 100 followers, friction a = 2, the tuned gains, symmetric position coupling
p = PlatoonParams(100, friction=2.0, gain_x=6.2, gain_v=10.0, asym_x=0.5, asym_v=0.4)

w = signal_velocities(p)
print(f"forward wave  c+ = {w.c_plus:.5f} vehicles/s")
print(f"reflected     c- = {w.c_minus:.5f} vehicles/s")

pred = predict_transient(p)
trace = simulate_leader_step(p, t_end=3 * pred.half_period, dt=0.05)

# spacing error of every 20th vehicle at a few instants
for t in (10.0, 30.0, 54.0, 80.0):
    k = int(round(t / trace.dt))
    row = trace.errors[k, ::20]
    print(f"t = {t:5.1f}  e_0, e_20, ..., e_100 = {np.array2string(row, precision=2)}")

# a vehicle the wave has not reached yet stands still, so its spacing error
# grows like t; the distance it has covered is t - e_i
moved = trace.times[:, None] - trace.errors
for i in (25, 50, 75, 100):
    arrival = trace.times[np.argmax(moved[:, i] > 0.5)]
    print(f"vehicle {i:3d}: has moved 0.5 m at t = {arrival:6.1f} s, i/c+ = {i / w.c_plus:6.1f} s")

last = trace.last
print(f"tail peak {np.abs(last).max():.2f} (predicted first peak {pred.a1:.2f})")
