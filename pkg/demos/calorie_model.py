"""
From laps to kilocalories
=========================

A walker's session boils down to four numbers: loop perimeter, laps counted,
elapsed seconds and body weight. Everything else is derived.
"""

import numpy as np

from parktrack import compute_stats, classify_met, MET_BANDS
from parktrack.activity_model import format_truncated

# The intensity bands, slowest first.
for band in MET_BANDS:
    print(f"{band.label:>10}: [{band.pace_lo}, {band.pace_hi}) km/h -> MET {band.met}")

# 29 laps of a 110 m loop in 30 minutes.
s = compute_stats(weight_kg=73.3, perimeter_m=110, laps=29, elapsed_s=1800)
print(s)
print("displayed total:", format_truncated(s.total_kcal), "kcal")

# Sweep pace across the band edges and watch the MET step.
paces = np.round(np.arange(4.8, 9.2, 0.4), 1)
print([(float(p), classify_met(float(p))) for p in paces])

# Same walker, growing lap counts. Burn jumps at band edges instead of rising smoothly.
laps = np.arange(0, 41, 5)
burn = np.array([compute_stats(73.3, 110, int(n), 1800).total_kcal for n in laps])
for n, kcal in zip(laps, burn):
    print(f"{n:3d} laps  {kcal:8.2f} kcal")
