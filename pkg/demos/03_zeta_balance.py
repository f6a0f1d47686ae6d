"""Choosing U2's rate split zeta.

zeta moves U2's rate between its first stream (decoded before U1) and its
second stream (decoded last). Small zeta makes the first stage easy but loads
the last one; large zeta does the opposite and also hurts U1, whose decoding
waits on the first stage.
"""

import numpy as np

from fdrsma import analytic_breakdown, prepare, reference_config

base = reference_config().with_power(30.0)
ref = analytic_breakdown(prepare(base)).users()
print(f"reference zeta = {base.zeta}: U1 {ref['U1']:.4f}, U2 {ref['U2']:.4f}")

zetas = np.round(np.arange(0.0, 1.0001, 0.01), 2)
best = None
print("\nzeta    U1        U2")
for z in zetas:
    u = analytic_breakdown(prepare(base.evolve(zeta=float(z)))).users()
    if int(round(z * 100)) % 10 == 0:
        print(f"{z:4.2f}  {u['U1']:.4f}  {u['U2']:.4f}")
    # balance both users without letting either exceed its reference level
    if u["U1"] <= ref["U1"] and u["U2"] <= ref["U2"]:
        gap = abs(u["U1"] - u["U2"])
        if best is None or gap < best[0]:
            best = (gap, z)

print(f"\nmost balanced feasible zeta: {best[1]} (|P_U1 - P_U2| = {best[0]:.2e})")
