"""Gaussian splatting of point patterns onto a periodic pixel grid.

The splat is the differentiable front end of synthesis: pixel (i, j) holds
sum over points of exp(-d^2 / (2 sigma^2)), d being the torus distance from
grid node (g_i, g_j) to the point. `splat_adjoint` pulls an image-space
gradient back to per-point coordinate gradients analytically, so gradients
are exact for the truncated kernel actually evaluated.

Axis convention: image[ix, iy], axis 0 along x. The text dump transposes so
that file rows run along y (row 0 = lowest y).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .geometry import PointPattern, Window

__all__ = [
    "SplatConfig",
    "PixelImage",
    "splat",
    "splat_adjoint",
    "write_raster",
    "read_raster",
]

# cap on scratch array entries for chunked accumulation
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class SplatConfig:
    """Resolution and kernel of the splat.

    kernel_exponent selects the denominator of the Gaussian exponent:
    "stddev" gives exp(-d^2/(2 sigma^2)) (sigma is a standard deviation,
    the default), "variance" gives exp(-d^2/(2 sigma)).
    """

    N: int
    sigma: float
    truncation_radius_sigmas: float = 4.0
    kernel_exponent: str = "stddev"
    window: Window = field(default_factory=Window)

    def __post_init__(self):
        if self.N < 4 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        if self.kernel_exponent not in ("stddev", "variance"):
            raise ValueError(f"unknown kernel_exponent {self.kernel_exponent!r}")
        if not (self.truncation_radius_sigmas > 0):
            raise ValueError("truncation_radius_sigmas must be positive")
        if not (self.sigma >= self.sigma_min):
            raise ValueError(
                f"sigma={self.sigma} below sigma_min={self.sigma_min} (= s/N)"
            )

    @property
    def sigma_min(self):
        return self.window.s / self.N

    @property
    def pixel_size(self):
        return self.window.pixel_size(self.N)

    @property
    def cutoff(self):
        """Truncation radius in length units."""
        return self.truncation_radius_sigmas * self.sigma

    def kernel(self, d2):
        """Un-truncated kernel value at squared distance d2."""
        if self.kernel_exponent == "stddev":
            return np.exp(-d2 / (2.0 * self.sigma * self.sigma))
        return np.exp(-d2 / (2.0 * self.sigma))

    def kernel_prime_factor(self):
        """k'(d2)/k(d2) scale: grad wrt point = value * factor * (node - x)."""
        if self.kernel_exponent == "stddev":
            return 1.0 / (self.sigma * self.sigma)
        return 1.0 / self.sigma


@dataclass(frozen=True)
class PixelImage:
    """N x N real raster over the periodic window, indexed [ix, iy]."""

    values: np.ndarray
    window: Window = field(default_factory=Window)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"expected a square 2-d array, got shape {v.shape}")
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def N(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)


def _check_pattern(p: PointPattern, cfg: SplatConfig):
    if p.window != cfg.window:
        raise ValueError(
            f"pattern window s={p.window.s} does not match config s={cfg.window.s}"
        )


def _window_radius(cfg: SplatConfig):
    """Half-width in pixels of the per-point stencil, or None -> dense path.

    Stencil nodes at unwrapped axis offset <= (r + 1/2) px from the point;
    min-image distance equals the unwrapped one while that bound stays <= s,
    i.e. r <= N/2 - 1.
    """
    r = int(np.ceil(cfg.cutoff / cfg.pixel_size + 0.5))
    if r > cfg.N // 2 - 1:
        return None
    return r


def splat(p: PointPattern, cfg: SplatConfig) -> PixelImage:
    """Periodic Gaussian splat of the pattern at resolution cfg.N."""
    _check_pattern(p, cfg)
    N = cfg.N
    if len(p) == 0:
        return PixelImage(np.zeros((N, N)), cfg.window)
    r = _window_radius(cfg)
    if r is None:
        img = _splat_dense(p.points, cfg)
    else:
        img = _splat_windowed(p.points, cfg, r)
    return PixelImage(img, cfg.window)


def _stencil_geometry(pts, cfg: SplatConfig, r):
    """Per-point stencil: displacements (node - x) and wrapped node indices."""
    px = cfg.pixel_size
    s = cfg.window.s
    i0 = np.floor((pts + s) / px + 0.5).astype(np.int64)  # nearest node index
    offs = np.arange(-r, r + 1)
    # unwrapped node coordinate minus point coordinate, per axis
    dx = (-s + px * (i0[:, 0:1] + offs[None, :])) - pts[:, 0:1]
    dy = (-s + px * (i0[:, 1:2] + offs[None, :])) - pts[:, 1:2]
    ix = np.mod(i0[:, 0:1] + offs[None, :], cfg.N)
    iy = np.mod(i0[:, 1:2] + offs[None, :], cfg.N)
    return dx, dy, ix, iy


def _splat_windowed(pts, cfg: SplatConfig, r):
    N = cfg.N
    cut2 = cfg.cutoff**2
    img = np.zeros(N * N)
    chunk = max(1, _CHUNK_BUDGET // (2 * r + 1) ** 2)
    for lo in range(0, pts.shape[0], chunk):
        dx, dy, ix, iy = _stencil_geometry(pts[lo : lo + chunk], cfg, r)
        d2 = dx[:, :, None] ** 2 + dy[:, None, :] ** 2
        vals = cfg.kernel(d2)
        vals[d2 > cut2] = 0.0
        flat = (ix[:, :, None] * N + iy[:, None, :]).ravel()
        img += np.bincount(flat, weights=vals.ravel(), minlength=N * N)
    return img.reshape(N, N)


def _splat_dense(pts, cfg: SplatConfig):
    """All-nodes path for kernels wider than the window (no truncation box)."""
    N = cfg.N
    side = cfg.window.side
    g = cfg.window.grid_coords(N)
    cut2 = cfg.cutoff**2
    img = np.zeros((N, N))
    chunk = max(1, _CHUNK_BUDGET // (N * N))
    for lo in range(0, pts.shape[0], chunk):
        sub = pts[lo : lo + chunk]
        dx = g[None, :] - sub[:, 0:1]
        dx -= side * np.round(dx / side)
        dy = g[None, :] - sub[:, 1:2]
        dy -= side * np.round(dy / side)
        d2 = dx[:, :, None] ** 2 + dy[:, None, :] ** 2
        vals = cfg.kernel(d2)
        vals[d2 > cut2] = 0.0
        img += vals.sum(axis=0)
    return img


def splat_adjoint(p: PointPattern, cfg: SplatConfig, image_grad) -> np.ndarray:
    """d/dx_i of <image_grad, splat(p)>, an (n, 2) array.

    Exact adjoint of the truncated kernel sum: each kept node contributes
    G[node] * k(d2) * factor * (node - x).
    """
    _check_pattern(p, cfg)
    G = np.asarray(image_grad, dtype=float)
    if G.shape != (cfg.N, cfg.N):
        raise ValueError(f"image_grad shape {G.shape} does not match N={cfg.N}")
    pts = p.points
    out = np.zeros_like(pts)
    if len(p) == 0:
        return out
    fac = cfg.kernel_prime_factor()
    cut2 = cfg.cutoff**2
    r = _window_radius(cfg)
    if r is None:
        N = cfg.N
        side = cfg.window.side
        g = cfg.window.grid_coords(N)
        chunk = max(1, _CHUNK_BUDGET // (N * N))
        for lo in range(0, pts.shape[0], chunk):
            sub = pts[lo : lo + chunk]
            dx = g[None, :] - sub[:, 0:1]
            dx -= side * np.round(dx / side)
            dy = g[None, :] - sub[:, 1:2]
            dy -= side * np.round(dy / side)
            d2 = dx[:, :, None] ** 2 + dy[:, None, :] ** 2
            w = cfg.kernel(d2)
            w[d2 > cut2] = 0.0
            w *= G[None, :, :]
            out[lo : lo + chunk, 0] = fac * np.einsum("pij,pi->p", w, dx)
            out[lo : lo + chunk, 1] = fac * np.einsum("pij,pj->p", w, dy)
    else:
        chunk = max(1, _CHUNK_BUDGET // (2 * r + 1) ** 2)
        for lo in range(0, pts.shape[0], chunk):
            dx, dy, ix, iy = _stencil_geometry(pts[lo : lo + chunk], cfg, r)
            d2 = dx[:, :, None] ** 2 + dy[:, None, :] ** 2
            w = cfg.kernel(d2)
            w[d2 > cut2] = 0.0
            w *= G[ix[:, :, None], iy[:, None, :]]
            out[lo : lo + chunk, 0] = fac * np.einsum("pij,pi->p", w, dx)
            out[lo : lo + chunk, 1] = fac * np.einsum("pij,pj->p", w, dy)
    return out


def write_raster(values, window: Window, path):
    """Text dump: header then rows along y, row 0 = lowest y."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError(f"raster must be square, got shape {v.shape}")
    lines = [f"# raster v1 M={v.shape[0]} s={window.s!r}"]
    for row in v.T:  # file row = fixed y, values along x
        lines.append(",".join(repr(float(c)) for c in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


_RASTER_HEADER_RE = re.compile(r"^#\s*raster\s+v1\s+M=(\d+)\s+s=([^\s]+)\s*$")


def read_raster(path):
    """Read the text matrix format; returns (values[ix, iy], Window)."""
    from .geometry import PatternFormatError

    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise PatternFormatError("empty file, expected raster header", line=1)
    m = _RASTER_HEADER_RE.match(raw[0])
    if m is None:
        raise PatternFormatError(f"bad raster header {raw[0]!r}", line=1)
    M = int(m.group(1))
    try:
        s = float(m.group(2))
    except ValueError:
        raise PatternFormatError(f"bad window size {m.group(2)!r}", line=1) from None
    if not np.isfinite(s) or s <= 0:
        raise PatternFormatError(f"bad window size {s!r}", line=1)
    rows = [r for r in raw[1:] if r.strip() != ""]
    if len(rows) != M:
        raise PatternFormatError(
            f"header says M={M} but file has {len(rows)} rows", line=len(raw)
        )
    vals = np.empty((M, M))
    for j, row in enumerate(rows):
        parts = row.split(",")
        if len(parts) != M:
            raise PatternFormatError(
                f"expected {M} comma-separated values, got {len(parts)}", line=j + 2
            )
        try:
            vals[j] = [float(c) for c in parts]
        except ValueError:
            raise PatternFormatError("non-numeric raster value", line=j + 2) from None
    if not np.all(np.isfinite(vals)):
        bad = int(np.argwhere(~np.isfinite(vals))[0][0])
        raise PatternFormatError("non-finite raster value", line=bad + 2)
    return vals.T.copy(), Window(s)
