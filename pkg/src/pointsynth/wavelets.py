"""Bump steerable wavelet bank, built directly in the Fourier domain.

Band-pass filter (j, l) is a real bump centered at radius xi0 * 2^-j and
angle 2*pi*l/L: psi_hat(w) = beta(2^j |w|) * alpha(angle(w) - theta_l) with

    beta(r)  = exp(-(r - xi0)^2 / (xi0^2 - (r - xi0)^2))   for |r - xi0| < xi0
    alpha(t) = cos(t)^(L-1)                                 for |t| < pi/2

and exact zeros elsewhere, so every band-pass filter annihilates DC. The
low-pass is a radial frequency Gaussian of std xi0 * 2^-J.

Band-pass filters are zeroed on the Nyquist row and column (frequency index
N/2): those bins have no mirror partner on an even grid, and keeping them
breaks exact 90-degree steerability. The low-pass is radial, hence already
symmetric there, and is left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType

import numpy as np

__all__ = [
    "LOWPASS",
    "WaveletBank",
    "build_bank",
    "wavelet_transform",
    "wavelet_adjoint",
    "default_xi0",
]

# dict key of the low-pass filter, also its (j, l) encoding in CSV dumps
LOWPASS = (-1, -1)


def default_xi0():
    """Mother-wavelet central frequency: j=0 band just under Nyquist."""
    return 0.85 * np.pi


@dataclass(frozen=True)
class WaveletBank:
    """Immutable filter bank; filters are real N x N frequency responses."""

    N: int
    J: int
    L: int
    xi0: float
    filters: MappingProxyType  # (j, l) -> array, plus LOWPASS -> array

    @property
    def bandpass_keys(self):
        return tuple((j, l) for j in range(self.J) for l in range(self.L))


def _validate_bank_params(N, J, L, xi0):
    if N < 4 or (N & (N - 1)) != 0:
        raise ValueError(f"N must be a power of two >= 4, got {N}")
    n_octaves = int(np.log2(N))
    if not (1 <= J <= n_octaves - 2):
        raise ValueError(
            f"J={J} out of range for N={N}: need 1 <= J <= log2(N) - 2 = {n_octaves - 2}"
        )
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    if not (0 < xi0 < np.pi):
        raise ValueError(f"xi0 must lie in (0, pi) radians/pixel, got {xi0}")


@lru_cache(maxsize=8)
def _build_bank_cached(N, J, L, xi0):
    w = 2.0 * np.pi * np.fft.fftfreq(N)
    rho = np.hypot(w[:, None], w[None, :])
    ang = np.arctan2(w[None, :], w[:, None])  # angle of (wx, wy), wx along axis 0
    ny = N // 2
    filters = {}
    for j in range(J):
        t = (2.0**j) * rho - xi0
        inside = np.abs(t) < xi0
        beta = np.zeros_like(rho)
        beta[inside] = np.exp(-(t[inside] ** 2) / (xi0**2 - t[inside] ** 2))
        for l in range(L):
            d = np.mod(ang - 2.0 * np.pi * l / L + np.pi, 2.0 * np.pi) - np.pi
            alpha = np.where(np.abs(d) < np.pi / 2, np.cos(d) ** (L - 1), 0.0)
            psi = beta * alpha
            psi[ny, :] = 0.0
            psi[:, ny] = 0.0
            psi.flags.writeable = False
            filters[(j, l)] = psi
    sig = xi0 * 2.0 ** (-J)
    lowpass = np.exp(-(rho**2) / (2.0 * sig * sig))
    lowpass.flags.writeable = False
    filters[LOWPASS] = lowpass
    return WaveletBank(N, J, L, xi0, MappingProxyType(filters))


def build_bank(N, J, L=8, xi0=None) -> WaveletBank:
    """J*L band-pass filters plus one low-pass at resolution N.

    Requires J <= log2(N) - 2 so the coarsest band still fits the grid;
    synthesis configurations use J = log2(N) - 3.
    """
    if xi0 is None:
        xi0 = default_xi0()
    xi0 = float(xi0)
    _validate_bank_params(N, J, L, xi0)
    return _build_bank_cached(int(N), int(J), int(L), xi0)


def wavelet_transform(img, bank: WaveletBank):
    """Periodic convolution with every filter: dict key -> complex N x N."""
    x = np.asarray(img, dtype=float)
    if x.shape != (bank.N, bank.N):
        raise ValueError(f"image shape {x.shape} does not match bank N={bank.N}")
    fx = np.fft.fft2(x)
    return {key: np.fft.ifft2(fx * psi) for key, psi in bank.filters.items()}


def wavelet_adjoint(coeff_grads, bank: WaveletBank):
    """Adjoint of wavelet_transform: sum_lambda ifft2(fft2(g) * conj(psi_hat)).

    Returns the complex field satisfying <g, Wx> = <W*g, x> for complex x;
    gradients of real objectives w.r.t. a real image are its real part.
    Keys absent from coeff_grads are treated as zero.
    """
    acc = np.zeros((bank.N, bank.N), dtype=complex)
    for key, g in coeff_grads.items():
        if key not in bank.filters:
            raise KeyError(f"unknown filter key {key!r}")
        g = np.asarray(g)
        if g.shape != (bank.N, bank.N):
            raise ValueError(f"grad shape {g.shape} does not match bank N={bank.N}")
        acc += np.fft.fft2(g) * np.conj(bank.filters[key])
    return np.fft.ifft2(acc)


def dump_filters(bank: WaveletBank, out_dir):
    """Write each frequency response as a raster file (inspection aid)."""
    import os

    from .geometry import Window
    from .rasterize import write_raster

    w = Window()
    for (j, l), psi in bank.filters.items():
        name = "lowpass" if (j, l) == LOWPASS else f"band_j{j}_l{l}"
        write_raster(np.fft.fftshift(psi), w, os.path.join(out_dir, name + ".txt"))
