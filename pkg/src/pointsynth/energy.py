"""Descriptor-matching energy over particle positions and its gradient.

E(p) = 1/2 |K(splat(p)) - K_ref|^2 with K_ref the observation's descriptor
at the same splat width. The gradient chains three hand-derived adjoints:
covariance -> phase harmonic -> wavelet (inside wph_descriptor_adjoint),
then splat_adjoint down to the 2n coordinates. Finite differences exist
here only as a check oracle, never as the gradient path.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .descriptors import (
    DescriptorVector,
    GammaH,
    nnd_descriptor,
    wph_descriptor,
    wph_descriptor_adjoint,
)
from .geometry import PointPattern, wrap_coords
from .rasterize import SplatConfig, splat, splat_adjoint
from .wavelets import WaveletBank

__all__ = [
    "EnergyContext",
    "EnergyReport",
    "make_energy_context",
    "energy_and_gradient",
    "energy_only",
    "relative_energy",
    "wph_energy_fn",
    "nnd_energy_fn",
    "gradient_check",
]


@dataclass(frozen=True)
class EnergyContext:
    """Everything fixed during one optimization stage."""

    splat_cfg: SplatConfig
    bank: WaveletBank
    gamma: GammaH
    reference: DescriptorVector  # observation descriptor, own means
    ref_norm_sq: float


@dataclass(frozen=True)
class EnergyReport:
    energy: float
    relative_energy: float
    gradient: np.ndarray  # (n, 2)


def make_energy_context(
    observation: PointPattern, splat_cfg: SplatConfig, bank: WaveletBank, gamma: GammaH
) -> EnergyContext:
    if len(observation) == 0:
        raise ValueError("observation must be non-empty")
    img = splat(observation, splat_cfg)
    ref = wph_descriptor(img.values, bank, gamma)
    nsq = float(np.sum(np.abs(ref.values) ** 2))
    if nsq == 0.0:
        raise ValueError("observation descriptor is identically zero")
    return EnergyContext(splat_cfg, bank, gamma, ref, nsq)


def _descriptor_diff(p: PointPattern, ctx: EnergyContext):
    img = splat(p, ctx.splat_cfg)
    desc = wph_descriptor(
        img.values, ctx.bank, ctx.gamma, reference_means=ctx.reference.means
    )
    return img, desc.values - ctx.reference.values


def energy_only(p: PointPattern, ctx: EnergyContext) -> float:
    _, diff = _descriptor_diff(p, ctx)
    return 0.5 * float(np.sum(np.abs(diff) ** 2))


def relative_energy(p: PointPattern, ctx: EnergyContext) -> float:
    """|K(p) - K_ref|^2 / |K_ref|^2, scale-free progress metric."""
    return 2.0 * energy_only(p, ctx) / ctx.ref_norm_sq


def energy_and_gradient(
    p: PointPattern, ctx: EnergyContext, _corrupt_stage=None
) -> EnergyReport:
    """Energy, relative energy and the per-point position gradient.

    _corrupt_stage ("descriptor" or "splat") deliberately scales that
    adjoint stage's output; negative control for the gradient checker.
    """
    if len(p) == 0:
        raise ValueError("pattern must be non-empty")
    img, diff = _descriptor_diff(p, ctx)
    energy = 0.5 * float(np.sum(np.abs(diff) ** 2))
    rel = 2.0 * energy / ctx.ref_norm_sq
    g_img = wph_descriptor_adjoint(
        img.values, ctx.bank, ctx.gamma, ctx.reference.means, diff
    )
    if _corrupt_stage == "descriptor":
        g_img = g_img * 1.001
    grad = splat_adjoint(p, ctx.splat_cfg, g_img)
    if _corrupt_stage == "splat":
        grad = grad * 1.001
    elif _corrupt_stage not in (None, "descriptor"):
        raise ValueError(f"unknown corrupt stage {_corrupt_stage!r}")
    return EnergyReport(energy, rel, grad)


def wph_energy_fn(ctx: EnergyContext):
    """Pattern -> energy callable (for random search on the WPH energy)."""

    def fn(p):
        return energy_only(p, ctx)

    fn.ref_norm_sq = ctx.ref_norm_sq
    return fn


def nnd_energy_fn(observation: PointPattern, k_max=16, r_max=0.125, n_radii=250):
    """Pattern -> energy callable on the stacked NND descriptor."""
    ref = nnd_descriptor(observation, k_max, r_max, n_radii)
    nsq = float(np.dot(ref, ref))

    def fn(p):
        d = nnd_descriptor(p, k_max, r_max, n_radii) - ref
        return 0.5 * float(np.dot(d, d))

    fn.ref_norm_sq = nsq
    return fn


def gradient_check(
    ctx: EnergyContext, p: PointPattern, h=None, corrupt_stage=None
):
    """Central-difference check of the full-chain gradient.

    Relative error per coordinate is |a - n| / max(|n|, 0.01 * max|n|):
    coordinates much smaller than the largest gradient entry are compared
    at that floor, so finite-difference noise on near-zero entries does
    not spoil the check. Returns (max_rel_err, analytic, numeric).
    """
    side = ctx.splat_cfg.window.side
    if h is None:
        h = 1e-5 * side
    report = energy_and_gradient(p, ctx, _corrupt_stage=corrupt_stage)
    analytic = report.gradient
    pts = p.points
    numeric = np.zeros_like(pts)
    for i in range(pts.shape[0]):
        for a in range(2):
            for sign in (+1.0, -1.0):
                q = pts.copy()
                q[i, a] += sign * h
                q = wrap_coords(q, ctx.splat_cfg.window)
                e = energy_only(
                    PointPattern(q, ctx.splat_cfg.window, _trusted=True), ctx
                )
                numeric[i, a] += sign * e
            numeric[i, a] /= 2.0 * h
    scale = np.max(np.abs(numeric))
    denom = np.maximum(np.abs(numeric), max(0.01 * scale, 1e-300))
    rel = np.abs(analytic - numeric) / denom
    return float(rel.max()), analytic, numeric


def timed(fn, *args, **kwargs):
    """(result, elapsed milliseconds)."""
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - t0) * 1e3
