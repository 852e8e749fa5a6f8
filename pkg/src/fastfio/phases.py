"""Phase and amplitude functions, residual phases and separation-rank bounds.

Phases are measured in cycles: the kernel is ``a(x, xi) exp(2 pi i Phi(x, xi))``.
All callables are vectorized over a trailing axis of length 2 and broadcast
over the leading axes of ``x`` and ``xi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import bessel

FD_STEP = 1e-5
RHO_FLOOR = 0.5


@dataclass(frozen=True)
class PhaseSpec:
    """A degree-one homogeneous phase ``Phi(x, xi)``.

    ``grad_dir(x, unit)`` returns ``grad_xi Phi(x, unit)`` for a unit vector;
    when absent, :meth:`gradient` falls back to angular finite differences.
    """

    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_dir: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x, xi) -> np.ndarray:
        return self.eval(np.asarray(x, dtype=np.float64), np.asarray(xi, dtype=np.float64))

    def gradient(self, x, unit) -> np.ndarray:
        return grad_at_center(self, x, unit)


@dataclass(frozen=True)
class AmplitudeSpec:
    eval: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    constant_one: bool = True
    name: str = "one"

    def __call__(self, x, xi) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        xi = np.asarray(xi, dtype=np.float64)
        if self.constant_one or self.eval is None:
            shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
            return np.ones(shape, dtype=np.complex128)
        return np.asarray(self.eval(x, xi), dtype=np.complex128)


ONE = AmplitudeSpec()


@dataclass(frozen=True)
class RankBoundInputs:
    d2: float
    d3: float
    alpha: float = np.pi
    epsilon: float = 1e-3
    n: int = 64

    def __post_init__(self):
        if min(self.d2, self.d3, self.alpha, self.epsilon, self.n) <= 0:
            raise ValueError("rank-bound inputs must be positive")
        if self.epsilon > 1:
            raise ValueError("epsilon must not exceed 1")


class HypothesisError(ValueError):
    """Grid too small for the large-N rank bound; ``min_n`` is the smallest admissible N."""

    def __init__(self, min_n: float):
        super().__init__(f"rank bound requires N >= {min_n:.6g}")
        self.min_n = min_n


# --------------------------------------------------------------------------
# gradients and residual phase


def _unit(theta):
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def grad_at_center(phase: PhaseSpec, x, center_dir) -> np.ndarray:
    """``grad_xi Phi(x, center_dir)``, shape ``x.shape[:-1] + (2,)``."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(center_dir, dtype=np.float64)
    if phase.grad_dir is not None:
        g = phase.grad_dir(x, u)
        return np.broadcast_to(g, x.shape[:-1] + (2,)).astype(np.float64)
    return fd_gradient(phase, x, u)


def fd_gradient(phase: PhaseSpec, x, center_dir, h: float = FD_STEP) -> np.ndarray:
    # polar relations: d/dxi_par = phi(theta), d/dxi_perp = phi'(theta)
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(center_dir, dtype=np.float64)
    theta = np.arctan2(u[1], u[0])
    phi0 = phase(x, _unit(theta))
    dphi = (phase(x, _unit(theta + h)) - phase(x, _unit(theta - h))) / (2 * h)
    perp = np.array([-np.sin(theta), np.cos(theta)])
    par = np.array([np.cos(theta), np.sin(theta)])
    return phi0[..., None] * par + dphi[..., None] * perp


def residual_phase(phase: PhaseSpec, wedge, x, xi, grad=None) -> np.ndarray:
    """``Phi(x, xi) - grad_xi Phi(x, center_dir) . xi``; zero at ``xi = 0``.

    ``wedge`` may be a :class:`~fastfio.wedges.Wedge` or a unit vector.  ``grad``
    lets callers pass a precomputed center gradient (same leading shape as x).
    """
    x = np.asarray(x, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    u = getattr(wedge, "center_dir", wedge)
    if grad is None:
        grad = grad_at_center(phase, x, u)
    val = phase(x, xi) - np.sum(grad * xi, axis=-1)
    zero = np.all(xi == 0, axis=-1)
    if np.any(zero):
        val = np.where(zero, 0.0, val)
    return val


# --------------------------------------------------------------------------
# built-in phases and amplitudes


def _dot(x, xi):
    return x[..., 0] * xi[..., 0] + x[..., 1] * xi[..., 1]


def _norm(xi):
    return np.hypot(xi[..., 0], xi[..., 1])


def identity_phase() -> PhaseSpec:
    return PhaseSpec(eval=_dot, grad_dir=lambda x, u: x, name="identity")


def shift_phase(d1: float, d2: float) -> PhaseSpec:
    """``(x + d) . xi``: translation by ``d`` (a lattice shift when ``d in Z^2 / N``)."""
    d = np.array([d1, d2], dtype=np.float64)
    return PhaseSpec(
        eval=lambda x, xi: _dot(x + d, xi),
        grad_dir=lambda x, u: x + d,
        name="shift",
        params={"d1": float(d1), "d2": float(d2)},
    )


def wave_phase(c: float = 1.0, t: float = 0.1, sign: int = 1) -> PhaseSpec:
    """``x . xi + sign c t |xi|``: constant-speed wave propagator."""
    ct = sign * c * t
    return PhaseSpec(
        eval=lambda x, xi: _dot(x, xi) + ct * _norm(xi),
        grad_dir=lambda x, u: x + ct * np.asarray(u) / np.linalg.norm(u),
        name="wave+" if sign > 0 else "wave-",
        params={"c": float(c), "t": float(t)},
    )


def default_radii():
    def r1(x):
        return (2 + np.sin(4 * np.pi * x[..., 0])) * (2 + np.sin(4 * np.pi * x[..., 1])) / 9

    def r2(x):
        return (2 + np.cos(4 * np.pi * x[..., 0])) * (2 + np.cos(4 * np.pi * x[..., 1])) / 9

    return r1, r2


def circle_radius(x):
    return (3 + np.sin(4 * np.pi * x[..., 0])) * (3 + np.sin(4 * np.pi * x[..., 1])) / 16


def constant_radius(r: float):
    return lambda x: np.full(np.shape(x)[:-1], float(r))


def ellipse_rho(r1, r2, x, xi):
    a = r1(x)
    b = r2(x)
    return np.sqrt((a * xi[..., 0]) ** 2 + (b * xi[..., 1]) ** 2)


def ellipse_phase(r1, r2, sign: int = 1) -> PhaseSpec:
    """``x . xi + sign * sqrt(r1(x)^2 xi_1^2 + r2(x)^2 xi_2^2)``."""
    sign = 1 if sign > 0 else -1

    def value(x, xi):
        return _dot(x, xi) + sign * ellipse_rho(r1, r2, x, xi)

    def grad(x, u):
        u = np.asarray(u, dtype=np.float64)
        a2 = r1(x) ** 2
        b2 = r2(x) ** 2
        rho = np.sqrt(a2 * u[0] ** 2 + b2 * u[1] ** 2)
        g = np.stack([a2 * u[0] / rho, b2 * u[1] / rho], axis=-1)
        return x + sign * g

    return PhaseSpec(eval=value, grad_dir=grad, name="ellipse+" if sign > 0 else "ellipse-")


def circle_phase(sign: int = 1) -> PhaseSpec:
    spec = ellipse_phase(circle_radius, circle_radius, sign)
    return PhaseSpec(eval=spec.eval, grad_dir=spec.grad_dir, name="circle")


def ellipse_amplitude(r1, r2, sign: int = 1) -> AmplitudeSpec:
    """``(J0(2 pi rho) +/- i Y0(2 pi rho)) exp(-/+ 2 pi i rho) / (4 pi)`` with ``rho >= 1/2``."""
    sign = 1 if sign > 0 else -1

    def value(x, xi):
        rho = np.maximum(ellipse_rho(r1, r2, x, xi), RHO_FLOOR)
        t = 2 * np.pi * rho
        shape = t.shape
        t = t.ravel()
        h = bessel.j0(t) + sign * 1j * bessel.y0(t)
        return (h * np.exp(-sign * 1j * t) / (4 * np.pi)).reshape(shape)

    return AmplitudeSpec(eval=value, constant_one=False, name="bessel+" if sign > 0 else "bessel-")


def _radii(spec):
    if spec is None or spec == "default":
        return default_radii()
    if spec == "circle":
        return circle_radius, circle_radius
    if np.isscalar(spec):
        return constant_radius(spec), constant_radius(spec)
    a, b = spec
    return constant_radius(a), constant_radius(b)


def builtin(name: str, params: dict | None = None) -> tuple[PhaseSpec, AmplitudeSpec]:
    """Look up a built-in ``(phase, amplitude)`` pair by registry name.

    Names: ``identity``, ``shift`` (d1, d2), ``wave+``/``wave-`` (c, t),
    ``ellipse+``/``ellipse-`` (radii: "default" | "circle" | r | [r1, r2];
    amplitude: "one" | "bessel") and ``circle``.
    """
    params = dict(params or {})
    if name == "identity":
        return identity_phase(), ONE
    if name == "shift":
        return shift_phase(params.get("d1", 0.0), params.get("d2", 0.0)), ONE
    if name in ("wave+", "wave-", "wave"):
        sign = -1 if name == "wave-" else int(params.get("sign", 1))
        return wave_phase(params.get("c", 1.0), params.get("t", 0.1), sign), ONE
    if name in ("ellipse+", "ellipse-", "ellipse"):
        sign = -1 if name == "ellipse-" else int(params.get("sign", 1))
        r1, r2 = _radii(params.get("radii", "default"))
        phase = ellipse_phase(r1, r2, sign)
        amp = ONE
        if params.get("amplitude", "one") == "bessel":
            amp = ellipse_amplitude(r1, r2, sign)
        return phase, amp
    if name == "circle":
        return circle_phase(int(params.get("sign", 1))), ONE
    raise KeyError(f"unknown built-in phase {name!r}")


BUILTIN_NAMES = ("identity", "shift", "wave+", "wave-", "ellipse+", "ellipse-", "circle")


# --------------------------------------------------------------------------
# rank bounds


def rank_bound_lemma1(a_bound: float, epsilon: float) -> float:
    """Separation-rank bound for ``exp(i x y)`` on ``[-A, A] x [-1, 1]``."""
    if a_bound <= 0 or epsilon <= 0:
        raise ValueError("A and epsilon must be positive")
    log_term = max(np.log(2 / epsilon), 0.0)
    if a_bound <= 1 / (2 * np.e):
        return 1 + log_term / np.log(1 / (np.e * a_bound))
    return 1 + max(2 * np.e * a_bound, log_term / np.log(2))


def rank_bound_theorem1(inputs: RankBoundInputs) -> float:
    """Large-N separation-rank bound for the residual exponential on one wedge."""
    alpha, d2, d3, eps = inputs.alpha, inputs.d2, inputs.d3, inputs.epsilon
    n_min = alpha**6 * d3**2 / (18 * eps**2)
    if inputs.n < n_min:
        raise HypothesisError(n_min)
    log_term = max(np.log(4 / eps), 0.0)
    if alpha <= np.sqrt(np.sqrt(2) / (np.e * d2)):
        return 1 + log_term / np.log(2 * np.sqrt(2) / (np.e * alpha**2 * d2))
    return 1 + max(np.e * np.sqrt(2) / 2 * alpha**2 * d2, log_term / np.log(2))


def angular_derivatives(phase: PhaseSpec, x, theta, h: float = 1e-3) -> np.ndarray:
    """Central-difference ``d^k/dtheta^k Phi(x, (cos, sin)(theta))`` for k = 0..3.

    Returns shape ``(4,) + broadcast(x, theta)``.
    """
    x = np.asarray(x, dtype=np.float64)[:, None, :]
    th = np.asarray(theta, dtype=np.float64)[None, :]
    f = {s: phase(x, _unit(th + s * h)) for s in (-2, -1, 0, 1, 2)}
    d0 = f[0]
    d1 = (f[1] - f[-1]) / (2 * h)
    d2 = (f[1] - 2 * f[0] + f[-1]) / h**2
    d3 = (f[2] - 2 * f[1] + 2 * f[-1] - f[-2]) / (2 * h**3)
    return np.stack([d0, d1, d2, d3])


def estimate_phase_constants(phase: PhaseSpec, n_x: int = 17, n_theta: int = 64) -> dict:
    """Sampled lower bounds for ``C_k = 2 pi sup |d^k_theta Phi|`` and ``D2, D3``.

    ``x`` runs over an ``n_x`` by ``n_x`` grid covering ``[0, 1]^2`` (endpoints
    included); ``theta`` over ``n_theta`` equispaced angles.
    """
    t = np.linspace(0.0, 1.0, n_x)
    x1, x2 = np.meshgrid(t, t, indexing="ij")
    xs = np.stack([x1.ravel(), x2.ravel()], axis=1)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    derivs = angular_derivatives(phase, xs, theta)
    c = 2 * np.pi * np.abs(derivs).reshape(4, -1).max(axis=1)
    return {"C": c.tolist(), "d2": float(c[0] + c[2]), "d3": float(c[1] + c[3])}
