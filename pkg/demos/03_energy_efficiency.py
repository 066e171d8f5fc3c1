"""
Energy efficiency as a function of one band's D2D power.

Raising the power helps the D2D link against cellular interference but
costs energy, so EE first rises and then falls. With circuit power the
falling part is gentler.
"""
import warnings

import numpy as np

from mmwave_d2d import check_feasibility, energy_efficiency, load_scenario

warnings.filterwarnings("ignore", message="alpha_L = 2")

cfg = load_scenario("scenarios/single_band_gain.json")
base = np.full(cfg.num_bands, 0.02)
print("P_d,1 [mW]   EE [bit/J]    QoS met")
for p1 in np.geomspace(1e-4, 2e-2, 12):
    p = base.copy()
    p[0] = p1
    ok = check_feasibility(cfg, p).feasible()
    print(f"{p1 * 1e3:10.4f}   {energy_efficiency(cfg, p):.5e}   {ok}")
