"""Samplers for the model families used as observations and references.

Everything is periodic: offspring disks, hardcore balls, circles, and
Voronoi tessellations all wrap. Every sampler is deterministic per seed and
returns a validated PointPattern.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Voronoi, cKDTree

from .geometry import PointPattern, Window, wrap_coords
from .rasterize import read_raster, write_raster
from .seeding import TAG_GENERATOR, spawn

__all__ = [
    "IntensityRaster",
    "GeneratorSpec",
    "GENERATOR_KINDS",
    "sample_binomial",
    "sample_poisson",
    "sample_poisson_intensity",
    "sample_cox_voronoi",
    "sample_cox_circles",
    "sample_matern2_hardcore",
    "sample_matern_cluster",
    "multiscale_intensity",
    "load_intensity",
    "save_intensity",
]


@dataclass(frozen=True)
class IntensityRaster:
    """Piecewise-constant periodic intensity (points per unit area).

    grid[i, j] is the rate over the half-open cell
    [-s + i*px, -s + (i+1)*px) x [-s + j*px, -s + (j+1)*px), px = side/M.
    """

    grid: np.ndarray
    window: Window = field(default_factory=Window)

    def __post_init__(self):
        g = np.ascontiguousarray(np.asarray(self.grid, dtype=float))
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise ValueError("intensity grid must be square and non-empty")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ValueError("intensity values must be finite and >= 0")
        if not np.any(g > 0):
            raise ValueError("intensity must be positive somewhere")
        g.flags.writeable = False
        object.__setattr__(self, "grid", g)

    @property
    def M(self):
        return self.grid.shape[0]

    @property
    def pixel_size(self):
        return self.window.side / self.M

    @property
    def total_mass(self):
        """Integral of the intensity = expected Poisson count."""
        return float(self.grid.mean() * self.window.area)

    def value_at(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        idx = np.floor((pts + self.window.s) / self.pixel_size).astype(int)
        idx = np.clip(idx, 0, self.M - 1)
        return self.grid[idx[:, 0], idx[:, 1]]


def load_intensity(path) -> IntensityRaster:
    values, window = read_raster(path)
    return IntensityRaster(values, window)


def save_intensity(raster: IntensityRaster, path):
    write_raster(raster.grid, raster.window, path)


def _positive(name, value):
    if not (value > 0):
        raise ValueError(f"{name} must be > 0, got {value}")


def sample_binomial(n, window: Window = Window(), seed=0) -> PointPattern:
    """n points drawn uniformly and independently."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = spawn(seed, TAG_GENERATOR)
    pts = rng.uniform(-window.s, window.s, size=(int(n), 2))
    return PointPattern(pts, window)


def sample_poisson(rate, window: Window = Window(), seed=0) -> PointPattern:
    """Homogeneous Poisson process with the given points-per-unit-area rate."""
    _positive("rate", rate)
    rng = spawn(seed, TAG_GENERATOR)
    n = rng.poisson(rate * window.area)
    pts = rng.uniform(-window.s, window.s, size=(n, 2))
    return PointPattern(pts, window)


def sample_poisson_intensity(raster: IntensityRaster, seed=0) -> PointPattern:
    """Inhomogeneous Poisson realization by thinning at the max rate."""
    rng = spawn(seed, TAG_GENERATOR)
    w = raster.window
    lam_max = float(raster.grid.max())
    n = rng.poisson(lam_max * w.area)
    pts = rng.uniform(-w.s, w.s, size=(n, 2))
    keep = rng.uniform(0.0, 1.0, size=n) * lam_max < raster.value_at(pts)
    return PointPattern(pts[keep], w)


def _clip_segment(p0, p1, s):
    """Liang-Barsky clip of segment p0-p1 to the closed square [-s, s]^2."""
    d = p1 - p0
    t0, t1 = 0.0, 1.0
    for axis in range(2):
        for sign in (1.0, -1.0):
            # inside condition: sign * x <= s
            denom = sign * d[axis]
            num = s - sign * p0[axis]
            if denom == 0.0:
                if num < 0:
                    return None
                continue
            t = num / denom
            if denom > 0:
                t1 = min(t1, t)
            else:
                t0 = max(t0, t)
            if t0 > t1:
                return None
    return p0 + t0 * d, p0 + t1 * d


def _periodic_voronoi_edges(parents, window: Window):
    """Edge segments of the torus Voronoi tessellation, clipped to the tile.

    Parents are replicated on a 3x3 block so qhull sees a Euclidean problem;
    duplicate clipped segments are removed by canonical (midpoint, length).
    """
    side = window.side
    offsets = [
        np.array([ox, oy])
        for ox in (-side, 0.0, side)
        for oy in (-side, 0.0, side)
    ]
    tiled = np.concatenate([parents + off for off in offsets], axis=0)
    vor = Voronoi(tiled)
    segs = []
    seen = set()
    for a, b in vor.ridge_vertices:
        if a < 0 or b < 0:
            continue
        clipped = _clip_segment(vor.vertices[a], vor.vertices[b], window.s)
        if clipped is None:
            continue
        q0, q1 = clipped
        length = float(np.hypot(*(q1 - q0)))
        if length < 1e-12:
            continue
        mid = 0.5 * (q0 + q1)
        key = (round(float(mid[0]), 8), round(float(mid[1]), 8), round(length, 8))
        if key in seen:
            continue
        seen.add(key)
        segs.append((q0, q1, length))
    return segs


def sample_cox_voronoi(
    parent_rate, edge_point_rate, window: Window = Window(), seed=0
) -> PointPattern:
    """Points laid down as a 1-D Poisson process along periodic Voronoi edges."""
    _positive("parent_rate", parent_rate)
    _positive("edge_point_rate", edge_point_rate)
    rng = spawn(seed, TAG_GENERATOR)
    n_parents = rng.poisson(parent_rate * window.area)
    if n_parents < 3:
        raise ValueError(
            f"only {n_parents} Voronoi parents sampled; tessellation needs >= 3 "
            "(raise parent_rate or change the seed)"
        )
    parents = rng.uniform(-window.s, window.s, size=(n_parents, 2))
    segs = _periodic_voronoi_edges(parents, window)
    lengths = np.array([s[2] for s in segs])
    total = lengths.sum()
    n_points = rng.poisson(edge_point_rate * total)
    which = rng.choice(len(segs), size=n_points, p=lengths / total)
    t = rng.uniform(0.0, 1.0, size=n_points)
    pts = np.empty((n_points, 2))
    for i, (si, ti) in enumerate(zip(which, t)):
        q0, q1, _ = segs[si]
        pts[i] = q0 + ti * (q1 - q0)
    return PointPattern(wrap_coords(pts, window), window)


def sample_cox_circles(
    parent_rate, r0, perimeter_point_rate, window: Window = Window(), seed=0
) -> PointPattern:
    """Points on circles of radius r0 around Poisson centers; counts per
    circle are Poisson(perimeter_point_rate * 2 pi r0)."""
    _positive("parent_rate", parent_rate)
    _positive("perimeter_point_rate", perimeter_point_rate)
    if not (0 < r0 < window.s):
        raise ValueError(f"need 0 < r0 < {window.s}, got {r0}")
    rng = spawn(seed, TAG_GENERATOR)
    n_parents = rng.poisson(parent_rate * window.area)
    centers = rng.uniform(-window.s, window.s, size=(n_parents, 2))
    counts = rng.poisson(perimeter_point_rate * 2 * np.pi * r0, size=n_parents)
    total = int(counts.sum())
    angles = rng.uniform(0.0, 2 * np.pi, size=total)
    parent_of = np.repeat(np.arange(n_parents), counts)
    pts = centers[parent_of] + r0 * np.stack(
        [np.cos(angles), np.sin(angles)], axis=1
    )
    return PointPattern(wrap_coords(pts, window), window)


def _proposals(rate_or_raster, window, rng):
    """Poisson proposal coordinates drawn from an already-keyed stream."""
    if isinstance(rate_or_raster, IntensityRaster):
        raster = rate_or_raster
        if window is not None and window != raster.window:
            raise ValueError("window disagrees with the raster's window")
        w = raster.window
        lam_max = float(raster.grid.max())
        n = rng.poisson(lam_max * w.area)
        pts = rng.uniform(-w.s, w.s, size=(n, 2))
        keep = rng.uniform(0.0, 1.0, size=n) * lam_max < raster.value_at(pts)
        return pts[keep], w
    if window is None:
        window = Window()
    _positive("rate", rate_or_raster)
    n = rng.poisson(rate_or_raster * window.area)
    return rng.uniform(-window.s, window.s, size=(n, 2)), window


def sample_matern2_hardcore(rate_or_raster, R, seed=0, window: Window = None):
    """Matern II dependent thinning: a proposal dies iff a proposal with a
    strictly smaller mark lies within periodic distance R. Survivors are
    therefore pairwise more than R apart (up to mark ties, which have
    probability zero)."""
    _positive("R", R)
    rng = spawn(seed, TAG_GENERATOR)
    proposals, window = _proposals(rate_or_raster, window, rng)
    n = len(proposals)
    if n == 0:
        return PointPattern(proposals, window)
    marks = rng.uniform(0.0, 1.0, size=n)
    tree = cKDTree(proposals + window.s, boxsize=window.side)
    pairs = tree.query_pairs(r=R, output_type="ndarray")
    dead = np.zeros(n, dtype=bool)
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        np.logical_or.at(dead, i, marks[j] < marks[i])
        np.logical_or.at(dead, j, marks[i] < marks[j])
    return PointPattern(proposals[~dead], window, _trusted=True)


def sample_matern_cluster(
    parent_rate_or_raster, cluster_radius, mean_offspring, seed=0,
    window: Window = None,
) -> PointPattern:
    """Matern cluster process: Poisson offspring uniform in periodic disks
    around Poisson parents; only offspring are returned."""
    _positive("cluster_radius", cluster_radius)
    if mean_offspring < 0:
        raise ValueError("mean_offspring must be >= 0")
    rng = spawn(seed, TAG_GENERATOR)
    parents, window = _proposals(parent_rate_or_raster, window, rng)
    counts = rng.poisson(mean_offspring, size=len(parents))
    total = int(counts.sum())
    parent_of = np.repeat(np.arange(len(parents)), counts)
    radii = cluster_radius * np.sqrt(rng.uniform(0.0, 1.0, size=total))
    angles = rng.uniform(0.0, 2 * np.pi, size=total)
    pts = parents[parent_of] + np.stack(
        [radii * np.cos(angles), radii * np.sin(angles)], axis=1
    )
    return PointPattern(wrap_coords(pts, window), window)


def multiscale_intensity(
    M, window: Window = Window(), target_total=1000.0, seed=0,
    scales=(0.25, 0.125, 0.0625), bumps_per_scale=(3, 6, 12),
) -> IntensityRaster:
    """Synthetic stand-in for an externally supplied intensity field: random
    periodic Gaussian bumps at a few dyadic scales, normalized so the
    expected Poisson count is target_total."""
    if len(scales) != len(bumps_per_scale):
        raise ValueError("scales and bumps_per_scale must align")
    _positive("target_total", target_total)
    rng = spawn(seed, TAG_GENERATOR)
    px = window.side / M
    centers_ax = -window.s + (np.arange(M) + 0.5) * px
    cx, cy = np.meshgrid(centers_ax, centers_ax, indexing="ij")
    grid = np.zeros((M, M))
    for sigma, n_bumps in zip(scales, bumps_per_scale):
        _positive("scale", sigma)
        locs = rng.uniform(-window.s, window.s, size=(n_bumps, 2))
        amps = rng.uniform(0.5, 1.5, size=n_bumps) / (sigma**2 * n_bumps)
        for (bx, by), amp in zip(locs, amps):
            dx = np.abs(cx - bx)
            dy = np.abs(cy - by)
            dx = np.minimum(dx, window.side - dx)
            dy = np.minimum(dy, window.side - dy)
            grid += amp * np.exp(-(dx**2 + dy**2) / (2 * sigma**2))
    grid *= target_total / (grid.mean() * window.area)
    return IntensityRaster(grid, window)


GENERATOR_KINDS = (
    "binomial",
    "poisson",
    "poisson_intensity",
    "cox_voronoi",
    "cox_circles",
    "matern2_hardcore",
    "matern_cluster",
)


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative description of a sampling job (kind + parameters + seed).

    Raster-driven kinds expect an IntensityRaster under params["raster"].
    """

    kind: str
    params: dict
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(
                f"unknown generator kind {self.kind!r}; expected one of "
                f"{', '.join(GENERATOR_KINDS)}"
            )

    def sample(self, window: Window = Window()) -> PointPattern:
        allowed = {
            "binomial": {"n"},
            "poisson": {"rate"},
            "poisson_intensity": {"raster"},
            "cox_voronoi": {"parent_rate", "edge_point_rate"},
            "cox_circles": {"parent_rate", "r0", "perimeter_point_rate"},
            "matern2_hardcore": {"rate", "R", "raster"},
            "matern_cluster": {
                "parent_rate", "cluster_radius", "mean_offspring", "raster",
            },
        }[self.kind]
        unknown = set(self.params) - allowed
        if unknown:
            raise ValueError(
                f"unknown parameter(s) for {self.kind}: {sorted(unknown)}"
            )
        try:
            return self._dispatch(window)
        except KeyError as exc:
            raise ValueError(f"{self.kind} requires parameter {exc}") from None

    def _dispatch(self, window: Window) -> PointPattern:
        p = dict(self.params)
        raster = p.pop("raster", None)
        if self.kind == "binomial":
            return sample_binomial(p.pop("n"), window, self.seed)
        if self.kind == "poisson":
            return sample_poisson(p.pop("rate"), window, self.seed)
        if self.kind == "poisson_intensity":
            if raster is None:
                raise ValueError("poisson_intensity needs params['raster']")
            return sample_poisson_intensity(raster, self.seed)
        if self.kind == "cox_voronoi":
            return sample_cox_voronoi(
                p.pop("parent_rate"), p.pop("edge_point_rate"), window, self.seed
            )
        if self.kind == "cox_circles":
            return sample_cox_circles(
                p.pop("parent_rate"), p.pop("r0"), p.pop("perimeter_point_rate"),
                window, self.seed,
            )
        if self.kind == "matern2_hardcore":
            source = raster if raster is not None else p.pop("rate")
            return sample_matern2_hardcore(
                source, p.pop("R"), self.seed,
                window=None if raster is not None else window,
            )
        source = raster if raster is not None else p.pop("parent_rate")
        return sample_matern_cluster(
            source, p.pop("cluster_radius"), p.pop("mean_offspring"), self.seed,
            window=None if raster is not None else window,
        )
