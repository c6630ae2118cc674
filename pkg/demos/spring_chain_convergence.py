"""Ten masses on springs: convergence and stability of CDM, trapezoidal and IMEX.

The last two masses are a thousand times lighter than the rest. They set the
global critical step of the explicit scheme, while the IMEX scheme treats them
implicitly and only has to respect the heavy part of the chain.

    python3 demos/spring_chain_convergence.py --out chain_study
"""
import argparse
from pathlib import Path

import numpy as np

from wavecell import scenarios as sc
from wavecell.spectra import critical_dt

ap = argparse.ArgumentParser()
ap.add_argument("--out", default=None, help="directory for error.csv")
args = ap.parse_args()

system = sc.spring_chain_system()
dt_g = critical_dt(system, "global").dt_crit
dt_e = critical_dt(system, "explicit_subsystem").dt_crit
print(f"critical steps: global {dt_g:.5g} s, explicit subsystem {dt_e:.5g} s")

# 10 to 10^4 steps over T = 50 s
n_steps = np.unique(np.round(np.logspace(1, 4, 16)).astype(int))
rows = []
print(f"{'dt':>10} {'cdm':>12} {'trapezoidal':>12} {'imex':>12}")
for n in n_steps:
    dt = 50.0 / n
    line = f"{dt:10.4g}"
    for kind in ("cdm", "trapezoidal", "imex"):
        r = sc.run(sc.build_chain_config(integrator=kind, dt=dt), write=False)
        e = r.errors["e_l2"] if r.stable else float("nan")
        rows.append((dt, kind, e, r.wall_time))
        line += f" {e:12.4e}" if r.stable else f" {'unstable':>12}"
    print(line)

if args.out:
    Path(args.out).mkdir(parents=True, exist_ok=True)
    sc.write_error_csv(rows, Path(args.out) / "error.csv")

# energy just below and just above the explicit limit
for factor in (0.99, 1.01):
    r = sc.run(sc.build_chain_config(dt=factor * dt_e), write=False)
    print(f"IMEX at {factor} x dt_crit(explicit): {'bounded' if r.stable else 'diverges'}")
