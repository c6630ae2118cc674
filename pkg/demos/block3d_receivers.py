"""Concrete column in 3D: receiver signals of CDM and Newmark IMEX.

A coarse version of the three-dimensional benchmark. The column stands in
for the scanned pillar; source and receivers sit at the benchmark's
coordinates. CDM runs just below its critical step, IMEX at a multiple of it.

    python3 demos/block3d_receivers.py --factor 5 --out block3d
"""
import argparse
from pathlib import Path

import numpy as np

from wavecell import scenarios as sc
from wavecell.mesh import interpolation_matrix
from wavecell.spectra import critical_dt

ap = argparse.ArgumentParser()
ap.add_argument("--factor", type=float, default=5.0, help="IMEX step / CDM critical step")
ap.add_argument("--out", default=None)
args = ap.parse_args()

cfg = sc.build_block3d(cells=(8, 8, 12), p=2, tree_depth=3)
disc = sc.discretize(cfg)
s = disc.system
print(f"dofs {s.n_dof}: diagonal {s.partition.n_d}, cut {s.partition.n_c}")
dt_cdm = critical_dt(s, "global").dt_crit
dt_exp = critical_dt(s, "explicit_subsystem").dt_crit
print(f"critical steps: CDM {dt_cdm:.3g} s, explicit subsystem {dt_exp:.3g} s")

P = interpolation_matrix(disc.mesh, np.asarray(cfg.receivers))
out = {}
for kind, dt in (("cdm", 0.9 * dt_cdm), ("imex", args.factor * dt_cdm)):
    n = int(round(cfg.T / dt))
    rec = sc.Recorder(s.K, P)
    tr = sc.integrate(kind, s, cfg.signal, cfg.T / n, n, [rec])
    out[kind] = rec
    print(f"{kind:5s} {n:6d} steps in {tr.wall_time:.2f} s")
    if args.out:
        Path(args.out, kind).mkdir(parents=True, exist_ok=True)
        rec.write(Path(args.out, kind))

t = np.array(out["imex"].t)
ref = np.array(out["cdm"].traces)
u = np.array(out["imex"].traces)
for j in range(len(cfg.receivers)):
    r = np.interp(t, out["cdm"].t, ref[:, j])
    print(f"R{j}: relative l2 difference IMEX vs CDM {np.linalg.norm(u[:, j] - r) / np.linalg.norm(r):.3f}")
