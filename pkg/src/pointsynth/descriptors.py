"""Wavelet phase harmonic covariance descriptor and the NND baseline.

The WPH descriptor of an image is, for each index entry (lam, k, lam', k',
tau), the spatial covariance

    (1/N^2) sum_x  mu_{lam,k}(x) * conj(mu_{lam',k'}(x - tau)),

where mu_{lam,k} = [img * psi_lam]^k - vbar_{lam,k} and [z]^k keeps the
modulus of z while multiplying its phase by k. Centering means vbar come
from the image itself, or from a reference image (plug-in) when supplied;
either way the gradient formula is identical because the centered fields
sum to zero, so the mean-derivative terms cancel exactly.

`wph_descriptor_adjoint` is the hand-derived backward pass of the whole
image -> descriptor map; its output feeds `splat_adjoint` to give gradients
with respect to point positions.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .wavelets import LOWPASS, WaveletBank, wavelet_adjoint, wavelet_transform

__all__ = [
    "EPS_PH",
    "phase_harmonic",
    "phase_harmonic_vjp",
    "GammaEntry",
    "GammaH",
    "build_gamma_h",
    "DescriptorVector",
    "wph_descriptor",
    "wph_descriptor_adjoint",
    "transform_entry",
    "conjugate_equivalent",
    "write_descriptor_csv",
    "nnd_descriptor",
]

# dead zone: below this modulus the phase is meaningless, so [z]^k := 0
# and its derivative := 0 (the map is non-differentiable at z = 0 anyway)
EPS_PH = 1e-12


def phase_harmonic(z, k):
    """[z]^k = |z| exp(i k arg z); zero (with zero derivative) below EPS_PH."""
    arr = np.asarray(z, dtype=complex)
    k = int(k)
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    r = np.abs(arr)
    if k == 1:
        out = np.where(r > EPS_PH, arr, 0.0)
    elif k == 0:
        out = np.where(r > EPS_PH, r, 0.0).astype(complex)
    else:
        out = r * np.exp(1j * k * np.angle(arr))
        out = np.where(r > EPS_PH, out, 0.0)
    if out.ndim == 0:
        return complex(out)
    return out


def phase_harmonic_vjp(z, k, g):
    """Pull a cotangent g on y = [z]^k back to z.

    Gradient convention: for a real objective, the cotangent of a complex
    quantity u is dL/dRe(u) + i dL/dIm(u). With phi = arg z,

        g_z = (k+1)/2 * exp(-i(k-1)phi) * g  +  (1-k)/2 * exp(i(k+1)phi) * conj(g)

    which reduces to g for k=1 and to exp(i phi) Re(g) for k=0.
    """
    arr = np.asarray(z, dtype=complex)
    g = np.asarray(g, dtype=complex)
    k = int(k)
    if k == 1:
        out = g.astype(complex, copy=True)
    else:
        phi = np.angle(arr)
        if k == 0:
            out = np.exp(1j * phi) * g.real
        else:
            out = (0.5 * (k + 1)) * np.exp(-1j * (k - 1) * phi) * g + (
                0.5 * (1 - k)
            ) * np.exp(1j * (k + 1) * phi) * np.conj(g)
    dead = np.abs(arr) <= EPS_PH
    out = np.where(dead, 0.0, out)
    if out.ndim == 0:
        return complex(out)
    return out


# One covariance index: lam = (j, l) band key or LOWPASS, tau integer pixels.
GammaEntry = namedtuple("GammaEntry", ["lam1", "k1", "lam2", "k2", "tau"])


@dataclass(frozen=True)
class GammaH:
    """Ordered covariance index set."""

    J: int
    L: int
    entries: tuple

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def field_keys(self):
        """Sorted unique (lam, k) pairs the entries reference."""
        keys = {(e.lam1, e.k1) for e in self.entries}
        keys |= {(e.lam2, e.k2) for e in self.entries}
        return tuple(sorted(keys))


def _direction(l, L):
    """Unit vector at angle 2*pi*l/L, quadrant-reduced when 4 | L.

    The reduction makes rotated indices share the exact same float
    magnitudes, so the rounded offsets of build_gamma_h rule (c) stay
    consistent under quarter-turn index shifts.
    """
    if L % 4 == 0:
        q, r = divmod(l, L // 4)
        phi = 2.0 * np.pi * r / L
        base = np.array([np.cos(phi), np.sin(phi)])
        rot90 = np.array([[0.0, -1.0], [1.0, 0.0]])
        for _ in range(q):
            base = rot90 @ base
        return base
    th = 2.0 * np.pi * l / L
    return np.array([np.cos(th), np.sin(th)])


def build_gamma_h(J, L, N, second_order_only=False) -> GammaH:
    """Default covariance index set, O(J^2 L^2) entries.

    (a) same-scale angle pairs within a quarter turn, (k,k') in
        {(1,1),(0,0),(0,1)}, tau = 0;
    (b) cross-scale pairs j < j', same angle, (k,k') in
        {(1, 2^(j'-j)), (0,0), (0,1)}, tau = 0;
    (c) same-band phase pairs translated by ~2^j pixels along the band's
        angle and its perpendicular;
    (d) the low-pass autocovariance.

    second_order_only keeps exactly the (k,k') = (1,1) entries.
    """
    if J < 1 or L < 2:
        raise ValueError(f"need J >= 1 and L >= 2, got J={J}, L={L}")
    if N < 4 or (N & (N - 1)) != 0:
        raise ValueError(f"N must be a power of two >= 4, got {N}")
    if 2 ** (J - 1) > N // 2:
        raise ValueError(f"J={J} offsets do not fit an N={N} grid")
    entries = []
    for j in range(J):
        for l1 in range(L):
            for l2 in range(L):
                d = abs(l1 - l2)
                if min(d, L - d) <= L / 4:
                    for kk in ((1, 1), (0, 0), (0, 1)):
                        entries.append(GammaEntry((j, l1), kk[0], (j, l2), kk[1], (0, 0)))
    for j1 in range(J):
        for j2 in range(j1 + 1, J):
            for l in range(L):
                for kk in ((1, 2 ** (j2 - j1)), (0, 0), (0, 1)):
                    entries.append(GammaEntry((j1, l), kk[0], (j2, l), kk[1], (0, 0)))
    for j in range(J):
        for l in range(L):
            u = _direction(l, L)
            for v in (u, np.array([-u[1], u[0]])):
                tau = np.round((2.0**j) * v).astype(int)
                entries.append(
                    GammaEntry((j, l), 1, (j, l), 1, (int(tau[0]), int(tau[1])))
                )
    entries.append(GammaEntry(LOWPASS, 1, LOWPASS, 1, (0, 0)))
    if second_order_only:
        entries = [e for e in entries if (e.k1, e.k2) == (1, 1)]
    return GammaH(J, L, tuple(entries))


@dataclass(frozen=True)
class DescriptorVector:
    """Complex covariance values aligned with gamma.entries, plus the
    first-moment estimates actually used for centering."""

    gamma: GammaH
    values: np.ndarray
    means: dict

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (len(self.gamma),):
            raise ValueError(
                f"values length {v.shape} does not match gamma size {len(self.gamma)}"
            )
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @property
    def norm(self):
        return float(np.linalg.norm(self.values))


def _validate_gamma_bank(gamma: GammaH, bank: WaveletBank):
    if gamma.J > bank.J or gamma.L != bank.L:
        raise ValueError(
            f"gamma (J={gamma.J}, L={gamma.L}) incompatible with bank "
            f"(J={bank.J}, L={bank.L})"
        )


def _harmonic_fields(img, bank, keys):
    coeffs = wavelet_transform(img, bank)
    fields = {key: phase_harmonic(coeffs[key[0]], key[1]) for key in keys}
    return coeffs, fields


def _resolve_means(fields, keys, reference_means):
    if reference_means is None:
        return {key: complex(fields[key].mean()) for key in keys}
    means = {}
    for key in keys:
        if key not in reference_means:
            raise KeyError(f"reference_means is missing field {key}")
        means[key] = complex(reference_means[key])
    return means


def wph_descriptor(img, bank: WaveletBank, gamma: GammaH, reference_means=None):
    """Covariance vector of img over gamma; centering means from img itself
    unless reference_means (the observation's) is given."""
    _validate_gamma_bank(gamma, bank)
    x = np.asarray(img, dtype=float)
    keys = gamma.field_keys
    _, fields = _harmonic_fields(x, bank, keys)
    means = _resolve_means(fields, keys, reference_means)
    U = {key: fields[key] - means[key] for key in keys}
    n2 = float(bank.N * bank.N)
    vals = np.empty(len(gamma), dtype=complex)
    for i, e in enumerate(gamma.entries):
        u1 = U[(e.lam1, e.k1)]
        u2 = U[(e.lam2, e.k2)]
        if e.tau != (0, 0):
            u2 = np.roll(u2, shift=e.tau, axis=(0, 1))
        vals[i] = np.vdot(u2, u1) / n2
    return DescriptorVector(gamma, vals, means)


def wph_descriptor_adjoint(
    img, bank: WaveletBank, gamma: GammaH, reference_means, cotangent
):
    """Gradient of Re<cotangent, K(img)> with respect to every pixel.

    The centering means contribute nothing to the gradient: the centered
    fields average to zero, so d/dU of each entry is unchanged whether the
    means are the image's own or a fixed reference.
    """
    _validate_gamma_bank(gamma, bank)
    x = np.asarray(img, dtype=float)
    c = cotangent.values if isinstance(cotangent, DescriptorVector) else cotangent
    c = np.asarray(c, dtype=complex)
    if c.shape != (len(gamma),):
        raise ValueError(f"cotangent length {c.shape} != gamma size {len(gamma)}")
    keys = gamma.field_keys
    coeffs, fields = _harmonic_fields(x, bank, keys)
    means = _resolve_means(fields, keys, reference_means)
    U = {key: fields[key] - means[key] for key in keys}
    n2 = float(bank.N * bank.N)
    g_fields = {key: np.zeros_like(U[key]) for key in keys}
    for i, e in enumerate(gamma.entries):
        ce = c[i]
        if ce == 0:
            continue
        key1 = (e.lam1, e.k1)
        key2 = (e.lam2, e.k2)
        u1 = U[key1]
        u2 = U[key2]
        if e.tau == (0, 0):
            g_fields[key1] += (ce / n2) * u2
            g_fields[key2] += (np.conj(ce) / n2) * u1
        else:
            g_fields[key1] += (ce / n2) * np.roll(u2, shift=e.tau, axis=(0, 1))
            neg = (-e.tau[0], -e.tau[1])
            g_fields[key2] += (np.conj(ce) / n2) * np.roll(u1, shift=neg, axis=(0, 1))
    g_coeffs = {}
    for (lam, k), g in g_fields.items():
        back = phase_harmonic_vjp(coeffs[lam], k, g)
        if lam in g_coeffs:
            g_coeffs[lam] = g_coeffs[lam] + back
        else:
            g_coeffs[lam] = back
    return wavelet_adjoint(g_coeffs, bank).real


_QUARTER_TURNS = {(1, 0): 0, (0, 1): 1, (-1, 0): 2, (0, -1): 3}


def transform_entry(entry: GammaEntry, A, L) -> GammaEntry:
    """Index entry e' with K(img transformed by A)[e] = K(img)[e'].

    A is one of the 8 integer orthogonal matrices; angle indices map by
    u_{l'} = A^-1 u_l and offsets by tau' = A^-1 tau. Requires 4 | L
    for quarter-turn index arithmetic. The result may fall outside a built
    gamma set only by offset negation; see conjugate_equivalent.
    """
    A = np.asarray(A, dtype=int)
    if L % 4 != 0:
        raise ValueError("angle-index transforms need 4 | L")
    det = int(round(np.linalg.det(A)))
    key = (int(A[0, 0]), int(A[1, 0]))
    m = _QUARTER_TURNS[key]

    def map_lam(lam):
        if lam == LOWPASS:
            return lam
        j, l = lam
        if det == 1:
            return (j, (l - m * (L // 4)) % L)
        return (j, (m * (L // 4) - l) % L)

    Ainv = A.T  # orthogonal
    tau = tuple(int(v) for v in (Ainv @ np.asarray(entry.tau, dtype=int)))
    return GammaEntry(map_lam(entry.lam1), entry.k1, map_lam(entry.lam2), entry.k2, tau)


def conjugate_equivalent(entry: GammaEntry) -> GammaEntry:
    """Entry whose value is the complex conjugate of the given entry's
    (swap the two fields and negate the offset)."""
    return GammaEntry(
        entry.lam2,
        entry.k2,
        entry.lam1,
        entry.k1,
        (-entry.tau[0], -entry.tau[1]),
    )


def write_descriptor_csv(desc: DescriptorVector, path):
    """Dump: one row per entry, low-pass encoded as j = l = -1."""
    lines = ["j,l,k,jp,lp,kp,taux,tauy,re,im"]
    for e, v in zip(desc.gamma.entries, desc.values):
        j, l = e.lam1
        jp, lp = e.lam2
        lines.append(
            f"{j},{l},{e.k1},{jp},{lp},{e.k2},{e.tau[0]},{e.tau[1]},"
            f"{float(v.real)!r},{float(v.imag)!r}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def nnd_descriptor(p, k_max=16, r_max=0.125, n_radii=250):
    """Stacked k-th nearest neighbour distance CDFs on the torus.

    Returns D_k(r_i) for k = 1..k_max (k-major), r_i = i*r_max/n_radii,
    i = 1..n_radii; each block is a nondecreasing curve in [0, 1].
    """
    from scipy.spatial import cKDTree

    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if not (0 < r_max <= p.window.s):
        raise ValueError(f"r_max must lie in (0, s], got {r_max}")
    if n_radii < 1:
        raise ValueError(f"n_radii must be >= 1, got {n_radii}")
    n = len(p)
    if n < k_max + 1:
        raise ValueError(
            f"pattern has {n} points; k_max={k_max} needs at least {k_max + 1}"
        )
    tree = cKDTree(p.points + p.window.s, boxsize=p.window.side)
    d, _ = tree.query(p.points + p.window.s, k=k_max + 1)
    d = d[:, 1:]  # drop self-distance column
    radii = r_max * np.arange(1, n_radii + 1) / n_radii
    return (d[:, :, None] <= radii[None, None, :]).mean(axis=0).ravel()
