"""
Heating a resting fluid from the wall
=====================================

A coarse version of the wall-heating run: mesh 0.2 pi, horizon 12, four
particle copies.  About 20 s on one core.
"""

import sys
import tempfile

import numpy as np

from obvortex import io
from obvortex.config import REDUCED, SimConfig

cfg = SimConfig(**REDUCED)
out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="obvortex_")
man = io.run(cfg, out)
print(f"{len(man.snapshots)} snapshots in {out}")

# the wall temperature peaks at x1 = 0 and ramps linearly in time
for snap in man.snapshots:
    f = io.read_snapshot(f"{out}/{snap['file']}")
    speed = np.hypot(f["u1"], f["u2"])
    print(f"t = {snap['t']:5.1f}  max theta {f['theta'].max():6.3f}  "
          f"max |u| {speed.max():.2e}  rho in [{f['rho'].min():.4f}, {f['rho'].max():.4f}]")

# convection is weak at this horizon, so the density barely moves,
# and the averaged velocity keeps the mirror symmetry of the heating
f = io.read_snapshot(f"{out}/{man.snapshots[-1]['file']}")
n1 = len(np.unique(f["x1"]))
u1 = f["u1"].reshape(-1, n1)
print("u1 oddness defect", np.linalg.norm(u1 + u1[:, ::-1]) / np.linalg.norm(u1))

# matplotlib scripts sit next to the CSVs
print("plot with: python3", f"{out}/plot_temperature.py")
