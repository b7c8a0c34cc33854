"""Point patterns on a periodic square window.

The window is the flat torus W_s = [-s, s) x [-s, s). Every coordinate in the
package is canonicalized into that half-open square; all distances and
differences are torus quantities.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Window",
    "PointPattern",
    "RigidCircularTransform",
    "PatternFormatError",
    "wrap_coords",
    "torus_diff",
    "torus_distance_matrix",
    "apply_transform",
    "square_symmetries",
    "read_pattern",
    "write_pattern",
    "random_thin",
]


class PatternFormatError(ValueError):
    """Malformed pattern file; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Window:
    """Half-open periodic square [-s, s)^2."""

    s: float = 0.5

    def __post_init__(self):
        if not (self.s > 0):
            raise ValueError(f"window half-side must be positive, got {self.s}")
        object.__setattr__(self, "s", float(self.s))

    @property
    def side(self):
        return 2.0 * self.s

    @property
    def area(self):
        return self.side * self.side

    def pixel_size(self, n_pixels):
        return self.side / n_pixels

    def grid_coords(self, n_pixels):
        """Coordinates of the n_pixels regular grid nodes along one axis."""
        return -self.s + self.side * np.arange(n_pixels) / n_pixels


def wrap_coords(x, w: Window):
    """Map coordinates to their canonical representative in [-s, s)."""
    x = np.asarray(x, dtype=float)
    side = w.side
    r = np.remainder(x + w.s, side)
    # float remainder can land on the open endpoint when x+s is a tiny negative
    r = np.where(r >= side, 0.0, r)
    return r - w.s


def torus_diff(a, b, w: Window):
    """Representative of a - b with both components in [-s, s)."""
    return wrap_coords(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), w)


def torus_distance_matrix(points_a, points_b, w: Window, chunk=1024):
    """Pairwise periodic distances, computed axis-by-axis to bound memory."""
    a = np.asarray(points_a, dtype=float)
    b = np.asarray(points_b, dtype=float)
    side = w.side
    out = np.empty((a.shape[0], b.shape[0]))
    for lo in range(0, a.shape[0], chunk):
        hi = min(lo + chunk, a.shape[0])
        d2 = np.zeros((hi - lo, b.shape[0]))
        for axis in range(2):
            d = np.abs(a[lo:hi, axis, None] - b[None, :, axis])
            d = np.minimum(d, side - d)
            d2 += d * d
        out[lo:hi] = np.sqrt(d2)
    return out


class PointPattern:
    """Immutable finite point configuration on the torus window.

    Coordinates are canonicalized on construction. Patterns are simple:
    construction rejects duplicate points.
    """

    __slots__ = ("points", "window")

    def __init__(self, points, window: Window = Window(), _trusted=False):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be an (n, 2) array, got shape {pts.shape}")
        if not _trusted:
            if not np.all(np.isfinite(pts)):
                raise ValueError("points must be finite")
            pts = wrap_coords(pts, window)
            if pts.shape[0] > 1 and np.unique(pts, axis=0).shape[0] != pts.shape[0]:
                raise ValueError("pattern must be simple: duplicate points rejected")
        pts = np.ascontiguousarray(pts)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window", window)

    def __setattr__(self, *a):
        raise AttributeError("PointPattern is immutable")

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return f"PointPattern(n={len(self)}, s={self.window.s})"

    def __eq__(self, other):
        if not isinstance(other, PointPattern):
            return NotImplemented
        return self.window == other.window and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.window, self.points.tobytes()))


def _as_trusted_pattern(points, window):
    """Wrap already-canonical coordinates without validation (hot paths)."""
    return PointPattern(points, window, _trusted=True)


_SQUARE_SYMMETRY_MATRICES = None


def square_symmetries():
    """The 8 integer orthogonal 2x2 matrices (rotations by 90 deg and flips)."""
    global _SQUARE_SYMMETRY_MATRICES
    if _SQUARE_SYMMETRY_MATRICES is None:
        rot = np.array([[0, -1], [1, 0]])
        flip = np.array([[1, 0], [0, -1]])
        mats = []
        m = np.eye(2, dtype=int)
        for _ in range(4):
            mats.append(m.copy())
            mats.append(m @ flip)
            m = rot @ m
        _SQUARE_SYMMETRY_MATRICES = tuple(np.ascontiguousarray(a) for a in mats)
    return _SQUARE_SYMMETRY_MATRICES


@dataclass(frozen=True)
class RigidCircularTransform:
    """x -> A x + b on the torus; A one of the 8 square-symmetry matrices."""

    A: np.ndarray
    b: np.ndarray
    window: Window = field(default_factory=Window)

    def __post_init__(self):
        A = np.asarray(self.A)
        if A.shape != (2, 2) or not np.array_equal(A, np.round(A)):
            raise ValueError("A must be an integer 2x2 matrix")
        if not np.array_equal(A.astype(int) @ A.astype(int).T, np.eye(2, dtype=int)):
            raise ValueError("A must be orthogonal")
        A = A.astype(int)
        A.flags.writeable = False
        b = wrap_coords(np.asarray(self.b, dtype=float).reshape(2), self.window)
        b.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    def apply(self, xy):
        xy = np.asarray(xy, dtype=float)
        return wrap_coords(xy @ self.A.T + self.b, self.window)

    def compose(self, other: "RigidCircularTransform"):
        """Transform equal to applying `other` first, then self."""
        return RigidCircularTransform(
            self.A @ other.A, self.A.astype(float) @ other.b + self.b, self.window
        )

    def inverse(self):
        Ainv = self.A.T
        return RigidCircularTransform(Ainv, -(Ainv.astype(float) @ self.b), self.window)


def apply_transform(t: RigidCircularTransform, p: PointPattern) -> PointPattern:
    """Map every atom through x -> A x + b, canonicalized to the window."""
    return PointPattern(t.apply(p.points), p.window, _trusted=True)


_HEADER_RE = re.compile(
    r"^#\s*pointsynth\s+v1\s+s=([^\s]+)\s+n=(\d+)\s*$"
)


def write_pattern(p: PointPattern, path):
    lines = [f"# pointsynth v1 s={p.window.s!r} n={len(p)}"]
    for x, y in p.points:
        lines.append(f"{float(x)!r},{float(y)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_pattern(path) -> PointPattern:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise PatternFormatError("empty file, expected header", line=1)
    m = _HEADER_RE.match(raw[0])
    if m is None:
        raise PatternFormatError(f"bad header {raw[0]!r}", line=1)
    try:
        s = float(m.group(1))
    except ValueError:
        raise PatternFormatError(f"bad window size {m.group(1)!r}", line=1) from None
    if not np.isfinite(s) or s <= 0:
        raise PatternFormatError(f"bad window size {s!r}", line=1)
    n = int(m.group(2))
    w = Window(s)
    rows = [r for r in raw[1:] if r.strip() != ""]
    if len(rows) != n:
        raise PatternFormatError(
            f"header says n={n} but file has {len(rows)} coordinate lines",
            line=len(raw),
        )
    pts = np.empty((n, 2))
    for i, row in enumerate(rows):
        parts = row.split(",")
        if len(parts) != 2:
            raise PatternFormatError(f"expected 'x,y', got {row!r}", line=i + 2)
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise PatternFormatError(f"non-numeric coordinate in {row!r}", line=i + 2) from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise PatternFormatError(f"non-finite coordinate in {row!r}", line=i + 2)
        if not (-s <= x < s and -s <= y < s):
            raise ValueError(
                f"point {i} at ({x}, {y}) outside window [-{s}, {s})"
            )
        pts[i] = (x, y)
    return PointPattern(pts, w)


def random_thin(p: PointPattern, target_count: int, rng) -> PointPattern:
    """Uniform subset of exactly target_count points, without replacement."""
    n = len(p)
    if not (0 <= target_count <= n):
        raise ValueError(f"target_count {target_count} not in [0, {n}]")
    rng = np.random.default_rng(rng)
    keep = np.sort(rng.choice(n, size=target_count, replace=False))
    return PointPattern(p.points[keep], p.window, _trusted=True)
