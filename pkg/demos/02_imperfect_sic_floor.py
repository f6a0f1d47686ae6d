"""How residual interference after SIC (theta) creates an outage floor.

With theta > 0 the residual of every cancelled stream scales with transmit
power, so raising the power cannot push the SINR past a fixed ceiling.
"""

from fdrsma import analytic_breakdown, prepare, reference_config

thetas = (0.0, 0.05, 0.1, 0.2)
powers = (10.0, 20.0, 30.0, 50.0)

for user in ("D1", "U1", "U2"):
    print(f"\n{user}: outage probability")
    print("theta   " + "  ".join(f"{p:>6.0f} dBm" for p in powers))
    for theta in thetas:
        cfg = reference_config(theta_sic=theta)
        row = [analytic_breakdown(prepare(cfg.with_power(p))).users()[user] for p in powers]
        print(f"{theta:5.2f}   " + "  ".join(f"{v:10.3e}" for v in row))

# Component view at 30 dBm, theta = 0.2: the last uplink stage (x22) carries the
# residual of both x12 and U1's signal, which is where U2's floor comes from.
b = analytic_breakdown(prepare(reference_config(theta_sic=0.2).with_power(30.0)))
print("\ncomponents at 30 dBm, theta = 0.2:")
for k, v in b.components().items():
    print(f"  {k:10s} {v:.4e}")

# Without co-channel interference and self-interference the downlink has no
# floor at all: each extra 10 dB cuts the outage by orders of magnitude.
clean = reference_config(cci_enabled=False, delta_si=0.0)
print("\ndownlink without CCI / SI:")
for p in (10.0, 20.0, 30.0):
    u = analytic_breakdown(prepare(clean.with_power(p))).users()
    print(f"  {p:4.0f} dBm  D1 {u['D1']:.3e}  D2 {u['D2']:.3e}")
