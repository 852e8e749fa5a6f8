import numpy as np
import pytest
from scipy import special

from fastfio.grid import freq_index, spatial_points
from fastfio.grt import PAIR_SCALE, apply_pair, default_n_theta, grt_as_fio_pair, grt_direct
from fastfio.phases import circle_radius, constant_radius, ellipse_rho, default_radii

from conftest import rel


def mode(n, xi0):
    x = spatial_points(n)
    return np.exp(2j * np.pi * x @ np.asarray(xi0, float)).reshape(n, n)


def band_limited(n, lo, hi, seed):
    rng = np.random.default_rng(seed)
    fh = np.zeros((n, n), complex)
    from fastfio.grid import frequency_points

    k = frequency_points(n)
    r = np.hypot(k[:, 0], k[:, 1])
    sel = (r >= lo) & (r <= hi)
    fh.ravel()[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    return np.fft.ifft2(fh) * n


def test_constant_input():
    r1, r2 = default_radii()
    g = grt_direct(np.ones((16, 16)), r1, r2)
    assert np.allclose(g, 2 * np.pi, atol=1e-12)


@pytest.mark.parametrize("xi0", [(3, -2), (0, 7), (-9, 5)])
def test_plane_wave_identity(xi0):
    n = 32
    r1, r2 = default_radii()
    f = mode(n, xi0)
    x = spatial_points(n)
    rho = ellipse_rho(r1, r2, x, np.asarray(xi0, float))
    expect = 2 * np.pi * special.j0(2 * np.pi * rho).reshape(n, n) * f
    assert np.abs(grt_direct(f, r1, r2) - expect).max() <= 1e-8


def test_quadrature_converged():
    n = 32
    r1, r2 = default_radii()
    f = band_limited(n, 0, n / 4, 1)
    m = default_n_theta(n)
    a = grt_direct(f, r1, r2, n_theta=m)
    b = grt_direct(f, r1, r2, n_theta=2 * m)
    assert np.abs(a - b).max() < 1e-8
    with pytest.raises(ValueError):
        grt_direct(f, r1, r2, n_theta=8)


def test_pair_single_mode_constant_radii():
    n = 32
    r = constant_radius(0.15)
    pair = grt_as_fio_pair(r, r, n, epsilon=1e-5)
    for xi0 in [(4, 0), (2, 3), (0, -4)]:
        f = mode(n, xi0)
        assert rel(apply_pair(pair, f) / PAIR_SCALE, grt_direct(f, r, r)) <= 1e-2
    assert np.all(apply_pair(pair, np.zeros((n, n))) == 0)


def test_pair_band_limited_circle_radii():
    n = 32
    pair = grt_as_fio_pair(circle_radius, circle_radius, n, epsilon=1e-4)
    f = band_limited(n, 4, n / 8, 2)
    got = apply_pair(pair, f) / PAIR_SCALE
    assert rel(got, grt_direct(f, circle_radius, circle_radius)) <= 1e-2
