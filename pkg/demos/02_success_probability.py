"""
Success probability of the typical D2D receiver and base station.

The analytic value rests on a gamma-CDF bound and gives every interferer
the exponent of the desired link. The simulation draws each interferer's
own blockage state, so the two differ by up to a few hundredths. For
Rayleigh fading with alpha_L = 2 the analytic expression has a closed
form, and quadrature reproduces it.
"""
import warnings

import numpy as np

from mmwave_d2d import SimulationPlan, estimate_stp, stp, table1_scenario

warnings.filterwarnings("ignore", message="alpha_L = 2")

plan = SimulationPlan(realizations=4000, seed=1, threads=4)
for m in (1, 2):
    cfg = table1_scenario(nakagami_m=m)
    print(f"\nm = {m}")
    print("  P_d [mW]   who   analytic   monte carlo (95% CI)")
    for p_mw in (0.1, 1.0, 20.0):
        p = np.full(cfg.num_bands, p_mw * 1e-3)
        for who in ("d2d", "bs"):
            a = stp(cfg, p[0], 0, who)
            e = estimate_stp(cfg, p, 0, who, plan)
            print(f"  {p_mw:7.1f}   {who:>3}   {a.value:.4f}     {e.mean:.4f} +- {e.half_width_95:.4f}")

cfg = table1_scenario()
q = stp(cfg, 1e-3, 0, "d2d", "quadrature").value
c = stp(cfg, 1e-3, 0, "d2d", "closed_form_m1").value
print(f"\nRayleigh closed form {c:.12f} vs quadrature {q:.12f}")
