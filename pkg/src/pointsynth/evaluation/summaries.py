"""Scalar and curve summaries used to score synthesized patterns.

All of these treat patterns as living on the periodic window, so the
spectrum uses the torus Fourier modes and the nearest-point queries wrap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtr, ndtri

from ..geometry import PointPattern, Window
from ..seeding import TAG_BOOTSTRAP, spawn

__all__ = [
    "RadialSpectrum",
    "radial_spectrum",
    "scdf",
    "euler_characteristic",
    "bootstrap_ci",
    "mds_embed",
    "write_spectrum_csv",
    "write_scdf_csv",
    "write_euler_csv",
    "write_dist_matrix_csv",
    "write_mds_csv",
]

_MODE_CHUNK = 512


@dataclass(frozen=True)
class RadialSpectrum:
    k: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=int)
        p = np.asarray(self.power, dtype=float)
        if k.shape != p.shape or k.ndim != 1:
            raise ValueError("k and power must be matching 1-d arrays")
        k.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "power", p)


def radial_spectrum(p: PointPattern, k_max=50) -> RadialSpectrum:
    """Ring-averaged periodogram, normalized so Poisson is flat at 1.

    Sums |sum_u exp(-i pi m.x_u / s)|^2 / n over integer modes m binned by
    floor(|m|), for 1 <= floor(|m|) <= k_max.
    """
    n = len(p)
    if n == 0:
        raise ValueError("pattern must be non-empty")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    s = p.window.s
    axis = np.arange(-k_max, k_max + 1)
    mx, my = np.meshgrid(axis, axis, indexing="ij")
    modes = np.stack([mx.ravel(), my.ravel()], axis=1)
    ring = np.floor(np.hypot(modes[:, 0], modes[:, 1])).astype(int)
    sel = (ring >= 1) & (ring <= k_max)
    modes, ring = modes[sel], ring[sel]

    power = np.empty(len(modes))
    for lo in range(0, len(modes), _MODE_CHUNK):
        block = modes[lo : lo + _MODE_CHUNK]
        phases = (-1j * np.pi / s) * (block @ p.points.T)
        F = np.exp(phases).sum(axis=1)
        power[lo : lo + _MODE_CHUNK] = np.abs(F) ** 2
    sums = np.bincount(ring, weights=power, minlength=k_max + 1)
    counts = np.bincount(ring, minlength=k_max + 1)
    k = np.arange(1, k_max + 1)
    return RadialSpectrum(k, sums[1:] / counts[1:] / n)


def scdf(p: PointPattern, radii, grid_n=128) -> np.ndarray:
    """Spherical contact distribution: fraction of probe-grid sites whose
    nearest pattern point lies within each radius."""
    if len(p) == 0:
        raise ValueError("pattern must be non-empty")
    radii = np.asarray(radii, dtype=float)
    w = p.window
    ax = w.grid_coords(grid_n)
    gx, gy = np.meshgrid(ax, ax, indexing="ij")
    probes = np.stack([gx.ravel(), gy.ravel()], axis=1)
    tree = cKDTree(p.points + w.s, boxsize=w.side)
    dist, _ = tree.query(probes + w.s, k=1)
    return (dist[None, :] <= radii[:, None]).mean(axis=1)


def euler_characteristic(diagram, radii) -> np.ndarray:
    """chi(r) = beta_0(r) - beta_1(r) from a persistence diagram.

    Finite classes count for birth <= r < death; essential ones never die.
    """
    radii = np.asarray(radii, dtype=float)
    out = np.empty(len(radii))
    b, d = diagram.births, diagram.deaths
    fin = ~diagram.essential
    sign = np.where(diagram.dims == 0, 1, -1)
    for i, r in enumerate(radii):
        alive = (b <= r) & ((r < d) | diagram.essential)
        out[i] = int((sign * alive).sum())
    return out


def _mean_ci_bca(x, boot, confidence):
    n = len(x)
    theta = x.mean()
    B = len(boot)
    frac = np.count_nonzero(boot < theta) / B
    frac = min(max(frac, 1.0 / (B + 1)), B / (B + 1.0))
    z0 = ndtri(frac)
    jack = (x.sum() - x) / (n - 1)
    dev = jack.mean() - jack
    denom = (dev**2).sum() ** 1.5
    a = (dev**3).sum() / (6.0 * denom) if denom > 0 else 0.0
    alpha = 1.0 - confidence
    out = []
    for zq in (ndtri(alpha / 2), ndtri(1 - alpha / 2)):
        adj = z0 + (z0 + zq) / (1.0 - a * (z0 + zq))
        out.append(float(np.quantile(boot, min(max(ndtr(adj), 0.0), 1.0))))
    return out[0], out[1]


def bootstrap_ci(
    samples, confidence=0.95, n_resamples=9999, method="bca", seed=0
) -> tuple:
    """Two-sided confidence interval for the mean of a small sample.

    method is one of "percentile", "bca" (bias-corrected accelerated) or
    "gaussian" (normal-theory, no resampling).
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = len(x)
    if n < 2:
        raise ValueError("need at least two samples")
    if not (0 < confidence < 1):
        raise ValueError("confidence must lie in (0, 1)")
    if method == "gaussian":
        half = ndtri(0.5 + confidence / 2) * x.std(ddof=1) / np.sqrt(n)
        return (float(x.mean() - half), float(x.mean() + half))
    if method not in ("percentile", "bca"):
        raise ValueError(f"unknown method {method!r}")
    if np.all(x == x[0]):
        c = float(x[0])
        return (c, c)
    rng = spawn(seed, TAG_BOOTSTRAP)
    idx = rng.integers(0, n, size=(n_resamples, n))
    boot = x[idx].mean(axis=1)
    if method == "percentile":
        alpha = 1.0 - confidence
        return (
            float(np.quantile(boot, alpha / 2)),
            float(np.quantile(boot, 1 - alpha / 2)),
        )
    return _mean_ci_bca(x, boot, confidence)


def mds_embed(dist_matrix) -> np.ndarray:
    """Classical 2-d multidimensional scaling of a distance matrix.

    Axis signs are fixed by making the first nonzero coordinate of each
    axis positive, so embeddings are reproducible.
    """
    D = np.asarray(dist_matrix, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    n = D.shape[0]
    if np.any(np.abs(D - D.T) > 1e-12) or np.any(np.abs(np.diag(D)) > 0):
        raise ValueError("distance matrix must be symmetric with zero diagonal")
    if np.any(D < 0):
        raise ValueError("distances must be nonnegative")
    J = np.eye(n) - np.ones((n, n)) / n
    Bmat = -0.5 * J @ (D**2) @ J
    vals, vecs = np.linalg.eigh(Bmat)
    order = np.argsort(vals)[::-1][:2]
    coords = np.zeros((n, 2))
    for axis, col in enumerate(order):
        lam = vals[col]
        if lam <= 0:
            continue
        v = vecs[:, col] * np.sqrt(lam)
        scale = np.abs(v).max()
        nz = np.nonzero(np.abs(v) > 1e-12 * max(scale, 1e-300))[0]
        if len(nz) and v[nz[0]] < 0:
            v = -v
        coords[:, axis] = v
    return coords


def write_spectrum_csv(spec: RadialSpectrum, path):
    lines = ["k,P"]
    for k, pw in zip(spec.k, spec.power):
        lines.append(f"{int(k)},{float(pw)!r}")
    _dump(path, lines)


def write_scdf_csv(radii, values, ci_lo, ci_hi, path):
    lines = ["r,H,ci_lo,ci_hi"]
    for r, v, lo, hi in zip(radii, values, ci_lo, ci_hi):
        lines.append(f"{float(r)!r},{float(v)!r},{float(lo)!r},{float(hi)!r}")
    _dump(path, lines)


def write_euler_csv(radii, values, ci_lo, ci_hi, path):
    lines = ["r,chi,ci_lo,ci_hi"]
    for r, v, lo, hi in zip(radii, values, ci_lo, ci_hi):
        lines.append(f"{float(r)!r},{float(v)!r},{float(lo)!r},{float(hi)!r}")
    _dump(path, lines)


def write_dist_matrix_csv(labels, dist_matrix, path):
    D = np.asarray(dist_matrix, dtype=float)
    lines = ["label," + ",".join(labels)]
    for label, row in zip(labels, D):
        lines.append(label + "," + ",".join(repr(float(v)) for v in row))
    _dump(path, lines)


def write_mds_csv(labels, coords, path):
    lines = ["label,x,y"]
    for label, (x, y) in zip(labels, np.asarray(coords, dtype=float)):
        lines.append(f"{label},{float(x)!r},{float(y)!r}")
    _dump(path, lines)


def _dump(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
