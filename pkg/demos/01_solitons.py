#!/usr/bin/env python3
"""Construct the two shrinking-soliton profiles and recover their constants.

The soliton ODE in slope-field variables is u_f + u/f - C u + f - 2 = 0 with
u(1) = 0.  Two values of C give admissible metrics: the compact soliton ends
at a second zero (which forces f_end = 3 and C in (1/2, 1)), while the
noncompact soliton opens into a cone at infinity (forcing C = sqrt 2).
"""

import numpy as np

from krflow.geometry import curvature, write_profile_csv
from krflow.soliton import (cao_koiso_profile, closed_form_weight_integral,
                            fik_profile, fik_y, find_cao_koiso_constant,
                            find_fik_constant, soliton_ode_residual,
                            soliton_shoot_r, weight_integral)

rt2 = np.sqrt(2.0)

print("= soliton constants =")
c_fik = find_fik_constant()
c_kc = find_cao_koiso_constant()
print(f"noncompact family: C = {c_fik:.12f}   (sqrt2 = {rt2:.12f})")
print(f"compact family:    C = {c_kc:.12f}   (must lie in (1/2, 1))")
print("quadrature vs closed form of the weight integral at C = 1:",
      f"{weight_integral(1.0):.9f} vs {closed_form_weight_integral(1.0):.9f}")

print("\n= compact soliton on [1, 3] =")
kc = cao_koiso_profile(2048)
rep = curvature(kc.profile)
print(f"ODE residual: {soliton_ode_residual(kc):.3e}")
print(f"Ricci eigenvalues: min lambda1 = {rep.lambda1.min():.4f}, "
      f"min lambda2 = {rep.lambda2.min():.4f}  (positive Ricci)")

print("\n= noncompact soliton truncated at f = 50 =")
fik = fik_profile(2048, f_max=50.0)
rep = curvature(fik.profile)
k = np.searchsorted(fik.profile.f, 1.2)
print(f"ODE residual: {soliton_ode_residual(fik):.3e}")
print(f"lambda2 near the section ({fik.profile.f[k]:.2f}): {rep.lambda2[k]:.4f}"
      f"   (mixed sign: lambda1 = {rep.lambda1[k]:.4f} there)")
print(f"closed form check: lambda2 = (1-sqrt2)/phi^2 = {(1-rt2)/fik.profile.f[k]**2:.4f}")
print(f"cone asymptote: Y(1000) - 1000/sqrt2 = {fik_y(1000.0) - 1000/rt2:.6f}"
      f"  -> 1 - sqrt2 = {1-rt2:.6f}")

print("\n= independent cross-check: shooting the second-order r-equation =")
shot = soliton_shoot_r(c_fik)
mask = shot.profile.f > 1.001
err = np.max(np.abs(shot.profile.u[mask] - fik_y(shot.profile.f[mask])))
print(f"r-shoot vs closed form on [1, {shot.profile.b:.1f}]: sup error {err:.2e}")

write_profile_csv(kc.profile, "cao_koiso.csv")
write_profile_csv(fik.profile, "fik.csv")
print("\nwrote cao_koiso.csv, fik.csv")
