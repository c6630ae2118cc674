"""Highest eigenfrequency of a single unit cell cut by a horizontal line.

Small fill ratios drive the maximum frequency up, and the critical time
step of an explicit scheme down with it. Orders 1 to 3 are shown.

    python3 demos/cut_cell_spectrum.py --depth 10
"""
import argparse

import numpy as np

from wavecell.spectra import cut_cell_spectrum

ap = argparse.ArgumentParser()
ap.add_argument("--depth", type=int, default=10, help="quadtree levels")
args = ap.parse_args()

etas = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0]
print(f"{'eta':>6}" + "".join(f"{'p=' + str(p):>12}" for p in (1, 2, 3)))
for eta in etas:
    w = [cut_cell_spectrum(eta, p, args.depth) for p in (1, 2, 3)]
    print(f"{eta:6.2f}" + "".join(f"{x:12.4f}" for x in w))

w_full = cut_cell_spectrum(1.0, 1, args.depth)
print(f"\ncritical step of the uncut p=1 cell: {2 / w_full:.4f}")
print(f"critical step at eta=0.01:           {2 / cut_cell_spectrum(0.01, 1, args.depth):.4f}")
