"""Spatial/frequency grids and the normalized 2-D DFT.

Spatial points are ``x = (n1/N, n2/N)`` for ``0 <= n1, n2 < N``.  Frequencies
are the integer pairs ``-N/2 <= k1, k2 < N/2``.  Frequency arrays are stored
in FFT-natural order (the layout produced by :func:`numpy.fft.fft2`); use
:func:`freq_labels` / :func:`freq_index` to move between storage positions
and frequency labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def check_side(n: int) -> int:
    n = int(n)
    if n <= 0 or n % 2:
        raise ValueError(f"grid side must be a positive even integer, got {n}")
    return n


@dataclass(frozen=True)
class SpatialGrid:
    n: int

    def __post_init__(self):
        check_side(self.n)

    @property
    def size(self) -> int:
        return self.n * self.n

    def points(self) -> np.ndarray:
        return spatial_points(self.n)


@dataclass(frozen=True)
class FrequencyGrid:
    n: int

    def __post_init__(self):
        check_side(self.n)

    @property
    def size(self) -> int:
        return self.n * self.n

    def points(self) -> np.ndarray:
        return frequency_points(self.n)


def spatial_points(n: int) -> np.ndarray:
    """Return the ``(n*n, 2)`` array of grid points, row-major over (n1, n2)."""
    n = check_side(n)
    i = np.arange(n) / n
    x1, x2 = np.meshgrid(i, i, indexing="ij")
    return np.stack([x1.ravel(), x2.ravel()], axis=1)


def freq_labels(n: int) -> np.ndarray:
    """Integer frequency label of each storage position along one axis."""
    n = check_side(n)
    return np.fft.fftfreq(n, d=1.0 / n).round().astype(np.int64)


def frequency_points(n: int) -> np.ndarray:
    """Return the ``(n*n, 2)`` integer labels of all frequencies in storage order."""
    k = freq_labels(n)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return np.stack([k1.ravel(), k2.ravel()], axis=1)


def freq_index(n: int, xi) -> np.ndarray:
    """Flat storage index of frequency label(s) ``xi`` (shape ``(..., 2)``)."""
    xi = np.asarray(xi, dtype=np.int64)
    if np.any(xi < -n // 2) or np.any(xi >= n // 2):
        raise ValueError(f"frequency outside [-{n // 2}, {n // 2}) grid")
    pos = np.mod(xi, n)
    return pos[..., 0] * n + pos[..., 1]


def as_field(f, n: int | None = None) -> np.ndarray:
    """Validate a square complex field, optionally against an expected side."""
    f = np.asarray(f, dtype=np.complex128)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError(f"expected a square 2-D field, got shape {f.shape}")
    if n is not None and f.shape[0] != n:
        raise ValueError(f"field side {f.shape[0]} does not match grid side {n}")
    check_side(f.shape[0])
    return f


def dft_forward(f) -> np.ndarray:
    """``fh(xi) = (1/N) sum_x exp(-2 pi i x.xi) f(x)``, stored in FFT order."""
    f = as_field(f)
    return np.fft.fft2(f) / f.shape[0]


def dft_inverse(fh) -> np.ndarray:
    """``f(x) = (1/N) sum_xi exp(2 pi i x.xi) fh(xi)``; inverse of :func:`dft_forward`."""
    fh = as_field(fh)
    return np.fft.ifft2(fh) * fh.shape[0]
