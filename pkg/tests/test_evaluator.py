import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastfio.evaluator import (
    apply_adjoint,
    apply_direct,
    apply_direct_adjoint,
    apply_forward,
    build_operator,
    direct_adjoint_hat,
    direct_at,
    sample_points,
    sampled_relative_error,
    wavefront_experiment,
)
from fastfio.grid import dft_forward, freq_index
from fastfio.phases import BUILTIN_NAMES, builtin
from fastfio.separation import NotCertifiedWarning

from conftest import random_field, rel

_OPS = {}


def op_for(name, n, eps, preset="six_digit", params=None):
    key = (name, n, eps, preset, tuple(sorted((params or {}).items())))
    if key not in _OPS:
        phase, amp = builtin(name, params)
        _OPS[key] = build_operator(phase, amp, n, epsilon=eps, nufft_preset=preset)
    return _OPS[key]


@pytest.mark.parametrize("preset,tol", [("six_digit", 1e-8), ("eleven_digit", 1e-12)])
def test_identity_exactness(preset, tol, rng):
    op = op_for("identity", 32, 1e-6, preset)
    f = random_field(rng, 32)
    assert np.abs(apply_forward(op, f) - f).max() <= tol * np.abs(f).max()
    assert np.abs(apply_adjoint(op, f) - f).max() <= tol * np.abs(f).max()


def test_integer_shift(rng):
    n = 32
    op = op_for("shift", n, 1e-6, params={"d1": 3 / n, "d2": -5 / n})
    f = random_field(rng, n)
    expect = np.roll(f, (-3, 5), axis=(0, 1))
    assert np.abs(apply_forward(op, f) - expect).max() <= 1e-8 * np.abs(f).max()
    assert np.abs(apply_adjoint(op, expect) - f).max() <= 1e-8 * np.abs(f).max()


def test_linearity(rng):
    op = op_for("ellipse+", 32, 1e-3)
    f, g = random_field(rng, 32), random_field(rng, 32)
    a, b = 0.7 - 0.2j, -1.3
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        lhs = apply_forward(op, a * f + b * g)
        rhs = a * apply_forward(op, f) + b * apply_forward(op, g)
    assert rel(lhs, rhs) <= 1e-10


def test_forward_matches_direct_n32(rng):
    for name in ("ellipse+", "circle", "wave-"):
        phase, amp = builtin(name)
        op = op_for(name, 32, 1e-4)
        f = random_field(rng, 32)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NotCertifiedWarning)
            fast = apply_forward(op, f)
        assert rel(fast, apply_direct(phase, amp, f)) <= 1e-3


def test_bessel_amplitude_forward_and_adjoint(rng):
    params = {"amplitude": "bessel"}
    phase, amp = builtin("ellipse-", params)
    op = op_for("ellipse-", 32, 1e-4, params=params)
    f = random_field(rng, 32)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        assert rel(apply_forward(op, f), apply_direct(phase, amp, f)) <= 1e-3
        assert rel(apply_adjoint(op, f), apply_direct_adjoint(phase, amp, f)) <= 1e-3


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_adjoint_pairing_n32(name):
    eps = 1e-3
    op = op_for(name, 32, eps)
    rng = np.random.default_rng(3)
    f, g = random_field(rng, 32), random_field(rng, 32)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        lhs = np.vdot(g, apply_forward(op, f))
        rhs = np.vdot(apply_adjoint(op, g), f)
    assert abs(lhs - rhs) <= 3 * eps * np.linalg.norm(f) * np.linalg.norm(g)


def test_adjoint_against_direct_samples(rng):
    phase, amp = builtin("ellipse+")
    eps = 1e-3
    op = op_for("ellipse+", 32, eps)
    f = random_field(rng, 32)
    cols = sample_points(32, 100, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        got = dft_forward(apply_adjoint(op, f)).ravel()[cols]
    assert rel(got, direct_adjoint_hat(phase, amp, f, cols)) <= eps


def test_thread_count_independent(rng):
    op = op_for("ellipse+", 32, 1e-3)
    f = random_field(rng, 32)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        assert np.array_equal(apply_forward(op, f, threads=1), apply_forward(op, f, threads=4))
        assert np.array_equal(apply_adjoint(op, f, threads=1), apply_adjoint(op, f, threads=3))


def test_cached_factors_match(rng):
    phase, amp = builtin("ellipse+")
    a = build_operator(phase, amp, 16, epsilon=1e-3)
    b = build_operator(phase, amp, 16, epsilon=1e-3, cache_factors=True)
    f = random_field(rng, 16)
    assert np.allclose(apply_forward(a, f), apply_forward(b, f), atol=1e-13)
    assert np.allclose(apply_forward(b, f), apply_forward(b, f), atol=0)


def test_dimension_mismatch():
    op = op_for("identity", 32, 1e-6)
    with pytest.raises(ValueError):
        apply_forward(op, np.zeros((16, 16)))
    with pytest.raises(ValueError):
        apply_adjoint(op, np.zeros((32, 30)))


# --------------------------------------------------------------------------
# direct references


def test_direct_identity_and_single_mode(rng):
    phase, amp = builtin("identity")
    f = random_field(rng, 16)
    assert np.abs(apply_direct(phase, amp, f) - f).max() <= 1e-12 * np.abs(f).max()
    assert np.abs(apply_direct_adjoint(phase, amp, f) - f).max() <= 1e-12 * np.abs(f).max()
    ell, bes = builtin("ellipse+", {"amplitude": "bessel"})
    fh = np.zeros((16, 16), complex)
    xi0 = np.array([3, -2])
    fh.ravel()[freq_index(16, xi0)] = 1
    f1 = np.fft.ifft2(fh) * 16  # dft_inverse
    from fastfio.grid import spatial_points

    x = spatial_points(16)
    expect = bes(x, xi0.astype(float)) * np.exp(2j * np.pi * ell(x, xi0.astype(float))) / 16
    assert np.allclose(apply_direct(ell, bes, f1).ravel(), expect, atol=1e-12)


def test_direct_linearity_and_guard(rng):
    phase, amp = builtin("circle")
    f, g = random_field(rng, 16), random_field(rng, 16)
    lhs = apply_direct(phase, amp, f + 2 * g)
    assert rel(lhs, apply_direct(phase, amp, f) + 2 * apply_direct(phase, amp, g)) <= 1e-12
    with pytest.raises(ValueError):
        apply_direct(phase, amp, np.zeros((16, 16)), max_n=8)
    with pytest.raises(ValueError):
        apply_direct_adjoint(phase, amp, np.zeros((16, 16)), max_n=8)


def test_sampled_error_protocol(rng):
    phase, amp = builtin("ellipse+")
    f = random_field(rng, 16)
    exact = apply_direct(phase, amp, f)
    assert sampled_relative_error(exact, phase, amp, f, s=100) <= 1e-13
    rows = sample_points(16, 50, 2)
    assert np.allclose(direct_at(phase, amp, f, rows), exact.ravel()[rows])
    with pytest.raises(ValueError):
        sampled_relative_error(exact, phase, amp, f, s=0)


def test_sampled_error_seed_stability(rng):
    phase, amp = builtin("ellipse+")
    op = op_for("ellipse+", 32, 1e-3)
    f = random_field(rng, 32)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        fast = apply_forward(op, f)
    e0 = sampled_relative_error(fast, phase, amp, f, s=100, seed=0)
    e1 = sampled_relative_error(fast, phase, amp, f, s=100, seed=1)
    assert abs(e0 - e1) <= 0.5 * max(e0, e1)


def test_wavefront_zero_input():
    op = op_for("circle", 32, 1e-3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        lf, llf = wavefront_experiment(op, np.zeros((32, 32)))
    assert np.all(lf == 0) and np.all(llf == 0)


def test_wavefront_point_impulse_energy(rng):
    phase, amp = builtin("circle")
    op = op_for("circle", 32, 1e-4)
    f = np.zeros((32, 32))
    f[16, 16] = 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        lf, llf = wavefront_experiment(op, f)
    exact = apply_direct(phase, amp, f)
    assert abs(np.linalg.norm(lf) - np.linalg.norm(exact)) <= 1e-3 * np.linalg.norm(exact)
    assert llf.shape == (32, 32)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_linearity_property(seed, alpha):
    op = op_for("wave+", 16, 1e-4)
    rng = np.random.default_rng(seed)
    f, g = random_field(rng, 16), random_field(rng, 16)
    lhs = apply_forward(op, alpha * f + g)
    rhs = alpha * apply_forward(op, f) + apply_forward(op, g)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * (abs(alpha) * np.linalg.norm(f) + np.linalg.norm(g)) * 4
