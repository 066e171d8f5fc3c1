"""
The building blocks of a single link: the sectored antenna, blockage and
Nakagami fading.

An interfering link lines up main lobes only when both beams happen to
point at each other, so its combined gain is a three-valued random
variable. Blockage decides the path-loss exponent, and fading multiplies
the received power by a unit-mean gamma variable whose spread shrinks as
m grows.
"""
import numpy as np

from mmwave_d2d import effective_gain_pmf, table1_scenario
from mmwave_d2d.propagation import los_probability, sample_fading

cfg = table1_scenario()
print("Interferer gain distribution (linear gain, probability):")
for g, p in effective_gain_pmf(cfg.antenna):
    print(f"  {g:8.4f}  {p:.4f}")
print(f"Desired link gain G0 = {cfg.G0:.1f}")

print("\nLOS probability exp(-beta r), beta = 0.45 / m:")
for r in (1, 2, 5, 10, 30):
    print(f"  r = {r:3d} m  P_LOS = {los_probability(r, cfg.beta):.4f}")

rng = np.random.default_rng(0)
print("\nFading power gain, 100k draws:")
for m in (1, 2, 4):
    g = sample_fading(m, rng, 100_000)
    print(f"  m = {m}: mean {g.mean():.4f}  variance {g.var():.4f} (exact {1 / m:.4f})")
