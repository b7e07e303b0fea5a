"""
Circular platoons: stability from three inequalities
=====================================================

Closing the platoon into a ring makes both Laplacians circulant, so every
Fourier mode gives a cubic for the closed-loop eigenvalues.  The stability
conditions can be checked against a brute-force scan of those cubics.
"""
import numpy as np

from platoonwave import (PlatoonParams, check_circular_stability, phase_velocity_curves,
                         signal_velocities, spectral_scan)

base = PlatoonParams(200, friction=2.0, gain_x=6.2, gain_v=10.0, asym_x=0.5, asym_v=0.4)

cases = {
    "tuned": base,
    "low friction a=1.45": base.with_(friction=1.45),
    "asymmetric positions": base.with_(asym_x=0.45),
    "a < gx/gv": base.with_(friction=0.5),
    "strong velocity asymmetry": base.with_(asym_v=0.3),
}
for name, p in cases.items():
    rep = check_circular_stability(p)
    scan = spectral_scan(p)
    bound = "-" if rep.beta_v_bound is None else f"{rep.beta_v_bound:.4f}"
    print(f"{name:28s} I={rep.cond_I!s:5} II={rep.cond_II!s:5} III={rep.cond_III!s:5} "
          f"bound={bound:>7}  max Re(nu)={scan.max_real:+.2e}  stable={rep.stable}")

# Phase velocities of the three branches at the lowest wavenumbers.  The two
# least damped ones tend to the signal velocities c+ and c-.
w = signal_velocities(base)
phi = 2 * np.pi * np.arange(1, 6) / 501
curves = phase_velocity_curves(base, phi)
print(f"\nc+ = {w.c_plus:.5f}, c- = {w.c_minus:.5f}")
for k in range(phi.size):
    ld = curves.least_damped(k)
    print(f"phi = {phi[k]:.4f}: velocities {np.array2string(curves.velocity[k], precision=4)}"
          f"  least damped +{ld['plus']:.4f} / {ld['minus']:.4f}")
