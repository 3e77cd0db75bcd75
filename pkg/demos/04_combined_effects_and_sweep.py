"""Cross impact and risk aversion together, and the theta sweep.

The two mechanisms pull in opposite directions: cross impact rewards a
long position (buying supports the option's underlier), risk aversion
demands a short hedge.  The expansion strategy exposes each component.
The sweep compares the expansion speed against the closed-form
delta-substitution rule under common random numbers as the joint scale
of (c, gamma) shrinks.
"""

import numpy as np

from crosshedge import (
    BachelierCallExposure,
    ExpansionScale,
    ModelParams,
    call_payoff_curve,
    nu_hat_components,
    theta_sweep,
)

params = ModelParams(mu=0.0, sigma=1.0, beta=0.0, eta=1.0, rho=0.5,
                     b=1e-2, c=1e-3, k=1e-3, gamma=2e-3, alpha=0.05, T=1.0)
exposure = BachelierCallExposure(n_options=100.0, strike=1.0, dt_offset=1e-5)
curve = call_payoff_curve(params, exposure)
scale = ExpansionScale.from_params(params, 1.0)

print("Speed decomposition at the money (q = 0):\n")
print(f"{'t':>5} {'base':>9} {'cross-impact':>13} {'risk-aversion':>14}")
for t in (0.1, 0.25, 0.5, 0.75, 0.9):
    nu0, c_term, g_term = nu_hat_components(params, curve, scale, t, 0.0, 1.0)
    print(f"{t:5.2f} {float(nu0):9.4f} {float(c_term):+13.4f} {float(g_term):+14.4f}")
print("\nThe cross-impact term stays positive (buy pressure), the risk term")
print("negative (short hedge); risk aversion dominates at these parameters.")

print("\n== theta sweep: expansion vs delta substitution ==")
rows = theta_sweep(params, exposure, [0.2, 0.1, 0.0], n_paths=40_000, seed=42, n_steps=400)
print(f"{'theta':>6} {'CE(nu_hat)':>12} {'CE(nu_prime)':>13} {'gap':>11} {'3*se':>10}  outcome")
for r in rows:
    outcome = "noise-bounded" if r["noise_bounded"] else "measured"
    if r["theta"] == 0.0:
        outcome = "identical strategies"
    print(
        f"{r['theta']:6.2f} {r['ce_nu_hat']:12.5f} {r['ce_nu_prime']:13.5f} "
        f"{r['gap']:11.2e} {3 * r['gap_se']:10.2e}  {outcome}"
    )
print("\nBoth rules agree to second order in theta; at realistic parameter")
print("sizes their certainty-equivalent gap sits inside Monte Carlo noise.")
