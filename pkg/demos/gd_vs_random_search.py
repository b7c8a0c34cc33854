"""Why gradients: descent vs single-point random search on the same energy.

Random search is the classic baseline for point-pattern fitting: propose
moving one point to a uniform location, keep the move if the energy drops.
It needs no gradient but pays for it in energy evaluations.

    python3 demos/gd_vs_random_search.py
"""

from pointsynth.descriptors import build_gamma_h
from pointsynth.energy import make_energy_context, wph_energy_fn
from pointsynth.generators import sample_binomial
from pointsynth.geometry import Window
from pointsynth.optimizers import (
    MultiscaleSchedule,
    SynthesisConfig,
    gd_synthesize,
    rs_synthesize,
)
from pointsynth.rasterize import SplatConfig
from pointsynth.wavelets import build_bank

W = Window()
N, J, L = 32, 2, 8
TARGET = 2e-3
observation = sample_binomial(120, seed=0)

# one shared energy: same splat width, same filter bank, same index set
sigma = 2.0 * W.side / N
splat_cfg = SplatConfig(N=N, sigma=sigma)
bank = build_bank(N, J, L)
gamma = build_gamma_h(J, L, N)
ctx = make_energy_context(observation, splat_cfg, bank, gamma)
energy = wph_energy_fn(ctx)

cfg = SynthesisConfig(
    N=N, J=J, L=L,
    schedule=MultiscaleSchedule((sigma,), 300),
    target_relative_energy=TARGET,
    final_blur=False,
    seed=1,
)
_, gd_trace = gd_synthesize(observation, cfg)
gd_evals = gd_trace.n_energy_evals
print(f"gradient descent: {gd_evals} evaluations to relative energy {TARGET:.0e}")

cap = 50 * gd_evals
_, rs_trace = rs_synthesize(
    observation, energy, 10_000, seed=1,
    target_relative_energy=TARGET, max_energy_evals=cap,
)
rs_rel = rs_trace.final_relative_energy
if rs_rel <= TARGET:
    print(f"random search: {rs_trace.n_energy_evals} evaluations")
    print(f"ratio: {rs_trace.n_energy_evals / gd_evals:.0f}x")
else:
    print(
        f"random search: still at {rs_rel:.1e} after {rs_trace.n_energy_evals} "
        f"evaluations (capped at {cap})"
    )
    print(f"ratio: > {cap / gd_evals:.0f}x")
