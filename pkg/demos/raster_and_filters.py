"""From points to pixels to descriptor: the measurement chain, step by step.

    python3 demos/raster_and_filters.py out/chain
"""

import sys
from pathlib import Path

import numpy as np

from pointsynth.descriptors import build_gamma_h, wph_descriptor
from pointsynth.generators import sample_matern_cluster
from pointsynth.geometry import Window
from pointsynth.rasterize import SplatConfig, splat, write_raster
from pointsynth.wavelets import build_bank, dump_filters, wavelet_transform

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "out/chain")
out_dir.mkdir(parents=True, exist_ok=True)
W = Window()
N = 64

p = sample_matern_cluster(25.0, 0.05, 10.0, seed=0)
print(f"pattern: {len(p)} points")

# Step 1: smear each point with a periodic Gaussian. Total mass is
# n * 2*pi*sigma^2 regardless of where the points sit.
for width_px in (0.5, 2.0):
    sigma = width_px * W.side / N
    img = splat(p, SplatConfig(N=N, sigma=sigma))
    write_raster(img.values, W, out_dir / f"splat_{width_px}px.txt")
    print(
        f"sigma = {width_px} px: mass {img.values.sum() * (W.side / N) ** 2:.4f} "
        f"(expect {len(p) * 2 * np.pi * sigma**2:.4f})"
    )

# Step 2: a steerable bank of band-pass wavelets plus one low-pass.
J, L = 3, 8
bank = build_bank(N, J, L)
dump_filters(bank, out_dir / "filters")
print(f"bank: {len(bank.filters)} filters -> {out_dir}/filters/")

# Step 3: covariances of phase-adjusted wavelet coefficients. The index
# set pairs nearby angles at equal scale, aligned angles across scales,
# spatial offsets within a band, and the low-pass.
img = splat(p, SplatConfig(N=N, sigma=2 * W.side / N))
coeffs = wavelet_transform(img.values, bank)
gamma = build_gamma_h(J, L, N)
desc = wph_descriptor(img.values, bank, gamma)
print(f"coefficient maps: {len(coeffs)} of shape {coeffs[(0, 0)].shape}")
print(f"descriptor: {len(desc.values)} complex entries")
print(f"norm^2: {float(np.sum(np.abs(desc.values) ** 2)):.6f}")
