"""Integration along ellipses and its two-FIO representation.

``Gf(x) = int_0^{2 pi} f(x + (r1(x) cos t, r2(x) sin t)) dt`` where ``f`` is
read as its 1-periodic trigonometric interpolant.  For a single mode
``exp(2 pi i x.xi)`` this gives ``2 pi J0(2 pi rho(x, xi))`` times the mode,
while the pair ``L+ + L-`` built from the Bessel amplitudes gives
``J0 / (2 pi)``; hence ``(L+ + L-) f = Gf / (4 pi^2)``.
"""

from __future__ import annotations

import numpy as np

from .evaluator import FioOperator, apply_forward, build_operator
from .grid import as_field, dft_forward, spatial_points
from .nufft import make_plan, nufft_type2
from .phases import ellipse_amplitude, ellipse_phase

PAIR_SCALE = 1.0 / (4 * np.pi**2)
_POINTS_PER_CHUNK = 1 << 19


def default_n_theta(n: int, r_max: float = 1.0) -> int:
    # the integrand's angular bandwidth is about 2 pi |xi| r <= pi N r_max
    return int(np.ceil(np.pi * n * r_max)) + 48


def grt_direct(f, r1, r2, n_theta: int | None = None) -> np.ndarray:
    """Trapezoidal ellipse integrals of the Fourier interpolant of ``f``."""
    f = as_field(f)
    n = f.shape[0]
    x = spatial_points(n)
    a = np.broadcast_to(r1(x), (n * n,))
    b = np.broadcast_to(r2(x), (n * n,))
    if n_theta is None:
        n_theta = default_n_theta(n, float(max(np.abs(a).max(), np.abs(b).max())))
    if n_theta < 16:
        raise ValueError("n_theta must be at least 16")
    coeffs = np.fft.fftshift(dft_forward(f)) / n  # offset (-N/2, -N/2)
    plan = make_plan(n, n, preset="eleven_digit")
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    out = np.zeros(n * n, dtype=np.complex128)
    per = max(1, _POINTS_PER_CHUNK // (n * n))
    for lo in range(0, n_theta, per):
        t = theta[lo : lo + per]
        pts = np.empty((len(t), n * n, 2))
        pts[..., 0] = x[:, 0] + a * np.cos(t)[:, None]
        pts[..., 1] = x[:, 1] + b * np.sin(t)[:, None]
        vals = nufft_type2(coeffs, pts.reshape(-1, 2), plan, offset=(-(n // 2), -(n // 2)))
        out += vals.reshape(len(t), n * n).sum(axis=0)
    return (out * (2 * np.pi / n_theta)).reshape(n, n)


def grt_as_fio_pair(
    r1, r2, n: int, epsilon: float = 1e-4, seed: int = 0, nufft_preset: str = "six_digit", threads: int = 1
) -> tuple[FioOperator, FioOperator]:
    """Operators ``L+`` and ``L-`` with phases ``x.xi +/- rho`` and Bessel amplitudes."""
    ops = []
    for sign in (1, -1):
        ops.append(
            build_operator(
                ellipse_phase(r1, r2, sign),
                ellipse_amplitude(r1, r2, sign),
                n,
                epsilon=epsilon,
                seed=seed,
                nufft_preset=nufft_preset,
                threads=threads,
            )
        )
    return ops[0], ops[1]


def apply_pair(pair: tuple[FioOperator, FioOperator], f, threads: int = 1) -> np.ndarray:
    """``(L+ + L-) f``; multiply by ``4 pi^2`` to compare with :func:`grt_direct`."""
    plus, minus = pair
    return apply_forward(plus, f, threads) + apply_forward(minus, f, threads)
