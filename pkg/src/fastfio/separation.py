"""Low-rank separation of the per-wedge kernel ``a(x, xi) exp(2 pi i Phi_l(x, xi))``.

Two routes are provided:

* :func:`separate_randomized` builds a skeleton factorization from sampled
  columns and rows and keeps only the two small core matrices;
* :func:`separate_deterministic` fits a polynomial in the angular offset to
  the residual phase, expands each factor in a truncated exponential series
  and merges the factors with :func:`compress_pair`.

Factor convention: the kernel block over spatial rows and wedge columns is
approximated by ``gamma_x @ gamma_xi.T`` (no conjugation).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .grid import spatial_points
from .phases import AmplitudeSpec, PhaseSpec, grad_at_center, rank_bound_lemma1
from .wedges import Wedge

PINV_RCOND = 1e-12
R_CAP = 4096


class NotCertifiedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SeparationConfig:
    epsilon: float = 1e-3
    r_init: int = 8
    accept_ratio: float = 1.0 / 3.0
    seed: int = 0
    p_taylor: int = 3
    svd_cutoff_mode: str = "frobenius"
    tail_fraction: float = 0.5
    check_fraction: float = 0.7
    check_samples: int = 400
    sampling: str = "uniform"
    scheme: str = "adaptive"
    trim: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.r_init < 2:
            raise ValueError("r_init must be at least 2")
        if not 0 < self.accept_ratio <= 1:
            raise ValueError("accept_ratio must lie in (0, 1]")
        if self.p_taylor < 0:
            raise ValueError("p_taylor must be non-negative")
        if self.svd_cutoff_mode not in ("relative", "frobenius"):
            raise ValueError(f"unknown SVD cutoff mode {self.svd_cutoff_mode!r}")
        if not 0 < self.tail_fraction <= 1 or not 0 < self.check_fraction:
            raise ValueError("tail_fraction must lie in (0, 1] and check_fraction must be positive")
        if self.sampling not in ("uniform", "regular"):
            raise ValueError(f"unknown sampling scheme {self.sampling!r}")
        if self.scheme not in ("adaptive", "plain"):
            raise ValueError(f"unknown column scheme {self.scheme!r}")


@dataclass(frozen=True, eq=False)
class SeparatedKernel:
    """Rank-``q`` factorization of one wedge's kernel.

    Skeleton mode stores sampled column indices ``cols`` (local indices into
    ``wedge.members``), sampled spatial row indices ``rows`` and the cores
    ``core1`` (r x q) and ``core2`` (q x r).  Explicit mode stores the factors
    ``gamma_x`` (N^2 x q) and ``gamma_xi`` (|W| x q).
    """

    ell: int
    n: int
    rank: int
    mode: str
    epsilon: float
    certified: bool = True
    gamma_x: Optional[np.ndarray] = None
    gamma_xi: Optional[np.ndarray] = None
    cols: Optional[np.ndarray] = None
    rows: Optional[np.ndarray] = None
    core1: Optional[np.ndarray] = None
    core2: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.mode == "skeleton":
            r = len(self.cols)
            if len(self.rows) != r or self.core1.shape != (r, self.rank) or self.core2.shape != (self.rank, r):
                raise ValueError("inconsistent skeleton shapes")
            if self.rank > r:
                raise ValueError("skeleton rank exceeds sample count")
        elif self.mode == "explicit":
            if self.gamma_x.shape[1] != self.rank or self.gamma_xi.shape[1] != self.rank:
                raise ValueError("inconsistent factor shapes")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def samples(self) -> int:
        return len(self.cols) if self.mode == "skeleton" else 0

    @property
    def stored_bytes(self) -> int:
        if self.mode == "skeleton":
            r = self.samples
            return 12 + 8 * r + 32 * r * self.rank
        return 16 * (self.gamma_x.size + self.gamma_xi.size)


# --------------------------------------------------------------------------
# kernel entries


class KernelSampler:
    """Evaluates blocks of one wedge's kernel, caching the center gradients."""

    def __init__(self, phase: PhaseSpec, amplitude: AmplitudeSpec, wedge: Wedge, n: int | None = None):
        self.phase = phase
        self.amplitude = amplitude
        self.wedge = wedge
        self.n = int(n or wedge.n)
        if self.n <= 0:
            raise ValueError("grid side unknown")
        self.x = spatial_points(self.n)
        self.grad = grad_at_center(phase, self.x, wedge.center_dir)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n * self.n, self.wedge.size

    def block(self, rows, cols) -> np.ndarray:
        rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
        cols = np.atleast_1d(np.asarray(cols, dtype=np.int64))
        x = self.x[rows][:, None, :]
        xi = self.wedge.members[cols].astype(np.float64)[None, :, :]
        g = self.grad[rows][:, None, :]
        res = self.phase(x, xi) - np.sum(g * xi, axis=-1)
        out = np.exp(2j * np.pi * res)
        if not self.amplitude.constant_one:
            out *= self.amplitude(x, xi)
        return out


def kernel_entry(phase: PhaseSpec, amplitude: AmplitudeSpec, wedge: Wedge, x_index: int, xi_index: int) -> complex:
    """Kernel value at flat spatial index ``x_index`` and flat frequency index ``xi_index``."""
    hit = np.flatnonzero(wedge.member_index == int(xi_index))
    if len(hit) == 0:
        raise ValueError(f"frequency index {xi_index} is not a member of wedge {wedge.ell}")
    n = wedge.n
    if not 0 <= int(x_index) < n * n:
        raise ValueError(f"spatial index {x_index} out of range")
    x = spatial_points(n)[int(x_index)]
    xi = wedge.members[hit[0]].astype(np.float64)
    g = grad_at_center(phase, x, wedge.center_dir)
    val = np.exp(2j * np.pi * (phase(x, xi) - g @ xi))
    if not amplitude.constant_one:
        val = val * amplitude(x, xi)
    return complex(val)


# --------------------------------------------------------------------------
# randomized skeleton route


def _draw(rng, size: int, r: int, scheme: str) -> np.ndarray:
    if r >= size:
        return np.arange(size, dtype=np.int64)
    if scheme == "regular":
        return np.unique(np.round(np.linspace(0, size - 1, r)).astype(np.int64))
    return np.sort(rng.choice(size, size=r, replace=False)).astype(np.int64)


def _draw_weighted(rng, weights: np.ndarray, r: int, exclude=None) -> np.ndarray:
    p = np.asarray(weights, dtype=np.float64).copy()
    if exclude is not None:
        p[exclude] = 0.0
    r = min(r, int(np.count_nonzero(p > 0)))
    if r <= 0:
        return np.zeros(0, dtype=np.int64)
    return np.sort(rng.choice(len(p), size=r, replace=False, p=p / p.sum())).astype(np.int64)


def _leverage_rows(rng, u: np.ndarray, r: int) -> np.ndarray:
    # half leverage, half uniform keeps every row reachable
    lev = np.sum(np.abs(u) ** 2, axis=1)
    m = u.shape[0]
    p = 0.5 * lev / lev.sum() + 0.5 / m if lev.sum() > 0 else np.full(m, 1.0 / m)
    return _draw_weighted(rng, p, r)


def _pivot_rows(rng, u: np.ndarray, r: int) -> np.ndarray:
    # pivoted QR picks rows that keep U[R] well conditioned; the rest by leverage
    _, _, piv = scipy.linalg.qr(u.conj().T, mode="economic", pivoting=True)
    head = np.sort(piv[: min(u.shape[1], r)]).astype(np.int64)
    lev = np.sum(np.abs(u) ** 2, axis=1)
    m = u.shape[0]
    p = 0.5 * lev / lev.sum() + 0.5 / m if lev.sum() > 0 else np.full(m, 1.0 / m)
    tail = _draw_weighted(rng, p, r - len(head), exclude=head)
    return np.sort(np.concatenate([head, tail]))


def truncation_rank(s: np.ndarray, epsilon: float, mode: str = "frobenius", tail_fraction: float = 0.5) -> int:
    """Number of singular values kept.

    ``relative`` keeps ``s >= epsilon * s[0]``; ``frobenius`` keeps the
    fewest values whose discarded tail has Frobenius norm at most
    ``tail_fraction * epsilon * ||s||``.
    """
    if len(s) == 0 or s[0] == 0:
        return 1
    if mode == "relative":
        return max(1, int(np.count_nonzero(s >= epsilon * s[0])))
    tail = np.sqrt(np.cumsum((s**2)[::-1])[::-1])  # tail[k] = norm of s[k:]
    ok = np.flatnonzero(tail <= tail_fraction * epsilon * tail[0])
    return max(1, int(ok[0]) if len(ok) else len(s))


def _column_basis(sampler: KernelSampler, cols, config: SeparationConfig):
    u, s, vh = np.linalg.svd(sampler.block(np.arange(sampler.shape[0]), cols), full_matrices=False)
    return u, s, vh, truncation_rank(s, config.epsilon, config.svd_cutoff_mode, config.tail_fraction)


def _skeleton_attempt(sampler: KernelSampler, rng, r: int, config: SeparationConfig):
    """One sampling round with ``r`` columns; returns ``(cols, rows, q, u, s, vh)``."""
    n_rows, n_cols = sampler.shape
    if config.scheme == "plain":
        cols = _draw(rng, n_cols, r, config.sampling)
        u, s, vh, q = _column_basis(sampler, cols, config)
        rows = _draw(rng, n_rows, len(cols), config.sampling)
        return cols, rows, q, u, s, vh
    # first half of the columns at random, the rest where the first basis fits worst
    c1 = _draw(rng, n_cols, max(1, r // 2), config.sampling)
    u1, _, _, q1 = _column_basis(sampler, c1, config)
    probe = _leverage_rows(rng, u1[:, :q1], r)
    a_probe = sampler.block(probe, np.arange(n_cols))
    u_probe = u1[probe, :q1]
    resid = a_probe - u_probe @ (np.linalg.pinv(u_probe, rcond=PINV_RCOND) @ a_probe)
    weights = np.sum(np.abs(resid) ** 2, axis=0) + 1e-300
    c2 = _draw_weighted(rng, weights, r - len(c1), exclude=c1)
    cols = np.sort(np.concatenate([c1, c2]))
    u, s, vh, q = _column_basis(sampler, cols, config)
    rows = _pivot_rows(rng, u[:, :q], len(cols))
    return cols, rows, q, u, s, vh


def _cores(u, s, vh, rows, q):
    core1 = vh[:q].conj().T / np.where(s[:q] > 0, s[:q], 1.0)
    core2 = np.linalg.pinv(u[rows, :q], rcond=PINV_RCOND)
    return core1, core2


class _Checker:
    """Relative error of a skeleton on one fixed random submatrix."""

    def __init__(self, sampler: KernelSampler, s: int, rng):
        n_rows, n_cols = sampler.shape
        self.sampler = sampler
        self.gam = np.sort(rng.choice(n_rows, size=min(s, n_rows), replace=False))
        self.dlt = np.sort(rng.choice(n_cols, size=min(s, n_cols), replace=False))
        self.exact = sampler.block(self.gam, self.dlt)
        self.norm = float(np.linalg.norm(self.exact))

    def prepare(self, cols, rows):
        self.a_gc = self.sampler.block(self.gam, cols)
        self.a_rd = self.sampler.block(rows, self.dlt)

    def __call__(self, core1, core2) -> float:
        approx = (self.a_gc @ core1) @ (core2 @ self.a_rd)
        diff = float(np.linalg.norm(self.exact - approx))
        return diff / self.norm if self.norm > 0 else diff


def separate_randomized(
    phase: PhaseSpec, amplitude: AmplitudeSpec, wedge: Wedge, config: SeparationConfig
) -> SeparatedKernel:
    """Skeleton factorization ``A ~ A[:, C] (V S^-1) (U[R]^+) A[R, :]`` with adaptive sample size.

    The sample count ``r`` doubles until the rank is at most
    ``accept_ratio * r`` and, when ``check_samples >= 2``, the error on a
    fixed random submatrix is at most ``check_fraction * epsilon``.  The
    accepted rank is then lowered while the check still passes.
    """
    if wedge.size == 0:
        raise ValueError(f"wedge {wedge.ell} is empty")
    sampler = KernelSampler(phase, amplitude, wedge)
    n_rows, n_cols = sampler.shape
    cap = min(n_cols, n_rows, R_CAP)
    rng = np.random.default_rng([int(config.seed), int(wedge.ell)])
    checker = None
    if config.check_samples >= 2:
        checker = _Checker(sampler, config.check_samples, np.random.default_rng([int(config.seed), int(wedge.ell), 2]))
    target = config.check_fraction * config.epsilon
    r = min(config.r_init, cap)
    while True:
        cols, rows, q, u, s, vh = _skeleton_attempt(sampler, rng, r, config)
        accepted = q <= len(cols) * config.accept_ratio
        if accepted and checker is not None:
            checker.prepare(cols, rows)
            accepted = checker(*_cores(u, s, vh, rows, q)) <= target
            if accepted and config.trim:
                while q > 1 and checker(*_cores(u, s, vh, rows, q - 1)) <= target:
                    q -= 1
        if accepted or r >= cap:
            break
        r = min(2 * r, cap)
    core1, core2 = _cores(u, s, vh, rows, q)
    certified = bool(accepted)
    if not certified:
        warnings.warn(f"wedge {wedge.ell}: rank {q} not certified at r = {len(cols)}", NotCertifiedWarning)
    return SeparatedKernel(
        ell=wedge.ell,
        n=sampler.n,
        rank=q,
        mode="skeleton",
        epsilon=config.epsilon,
        certified=certified,
        cols=cols,
        rows=rows,
        core1=np.ascontiguousarray(core1),
        core2=np.ascontiguousarray(core2),
    )


# --------------------------------------------------------------------------
# deterministic route


def compress_pair(fx1, fxi1, fx2, fxi2, epsilon: float):
    """Recompress the entrywise product of two separated expansions.

    Each input pair represents ``fx @ fxi.T``.  The product has the
    ``d1 * d2`` column factors ``fx1[:, i] * fx2[:, j]``; both sides are
    QR-factorized and the small core is truncated at ``epsilon`` relative to
    its largest singular value.  Returns ``(A, B)`` with ``A @ B.T`` the
    compressed product.
    """
    fx1, fxi1, fx2, fxi2 = (np.asarray(a, dtype=np.complex128) for a in (fx1, fxi1, fx2, fxi2))
    if min(a.size for a in (fx1, fxi1, fx2, fxi2)) == 0:
        raise ValueError("empty factors")
    if fx1.shape[0] != fx2.shape[0] or fxi1.shape[0] != fxi2.shape[0]:
        raise ValueError("factor row counts differ")
    if fx1.shape[1] != fxi1.shape[1] or fx2.shape[1] != fxi2.shape[1]:
        raise ValueError("factor ranks differ within a pair")
    a = (fx1[:, :, None] * fx2[:, None, :]).reshape(fx1.shape[0], -1)
    b = (fxi1[:, :, None] * fxi2[:, None, :]).reshape(fxi1.shape[0], -1)
    qa, ra = np.linalg.qr(a)
    qb, rb = np.linalg.qr(b)
    um, sm, vmh = np.linalg.svd(ra @ rb.T)
    if sm[0] == 0:
        keep = 1
    else:
        keep = max(1, int(np.count_nonzero(sm > epsilon * sm[0])))
    return qa @ (um[:, :keep] * sm[:keep]), qb @ vmh[:keep].T


def _fit_nodes(count: int) -> np.ndarray:
    # Chebyshev nodes on [-1, 1]
    k = np.arange(count)
    return np.cos(np.pi * (k + 0.5) / count)


def _cheb(s: np.ndarray, degree: int) -> np.ndarray:
    return np.cos(np.arange(degree + 1) * np.arccos(np.clip(s, -1.0, 1.0))[..., None])


def _angular_fit(phase: PhaseSpec, wedge: Wedge, x: np.ndarray, grad: np.ndarray, degree: int):
    """Least-squares fit ``psi(x, theta_l + h s) ~ sum_k c_k(x) T_k(s)``, k = 0..degree.

    ``psi`` is the residual phase on the unit circle, ``h`` the wedge's
    angular half-aperture, ``s`` in ``[-1, 1]`` and ``T_k`` the Chebyshev
    polynomials.  Returns ``(coeffs, worst)`` with ``coeffs`` of shape
    ``(N^2, degree + 1)`` and ``worst`` the largest residual over the fit
    nodes and an interleaved check set.
    """
    theta_c = wedge.center_angle
    half = 0.5 * (wedge.theta_hi - wedge.theta_lo)
    fit = _fit_nodes(2 * (degree + 1))
    check = _fit_nodes(2 * degree + 3)

    def psi(s):
        u = np.stack([np.cos(theta_c + half * s), np.sin(theta_c + half * s)], axis=-1)
        return phase(x[:, None, :], u[None]) - grad @ u.T

    coeffs, *_ = np.linalg.lstsq(_cheb(fit, degree), psi(fit).T, rcond=None)
    worst = 0.0
    for s in (fit, check):
        worst = max(worst, float(np.abs(psi(s) - (_cheb(s, degree) @ coeffs).T).max()))
    return coeffs.T, worst


def _exp_series(u: np.ndarray, a_bound: float, d: int) -> np.ndarray:
    """Columns ``(a u)^j / j!`` for ``j < d``, built by a running product."""
    out = np.empty((len(u), d), dtype=np.complex128)
    out[:, 0] = 1.0
    for j in range(1, d):
        out[:, j] = out[:, j - 1] * (a_bound * u / j)
    return out


def separate_deterministic(phase: PhaseSpec, wedge: Wedge, config: SeparationConfig, n: int | None = None) -> SeparatedKernel:
    """Explicit factorization from a polar expansion of the residual phase.

    The angular profile of the residual phase is fitted by a degree
    ``2p + 1`` polynomial in the normalized angular offset; each term
    ``exp(2 pi i c_k(x) |xi| T_k(s))`` is separated by a truncated
    exponential series sized by :func:`rank_bound_lemma1`, and the factors are
    merged with :func:`compress_pair`.
    """
    if wedge.size == 0:
        raise ValueError(f"wedge {wedge.ell} is empty")
    n = int(n or wedge.n)
    eps = config.epsilon
    degree = 2 * config.p_taylor + 1
    x = spatial_points(n)
    grad = grad_at_center(phase, x, wedge.center_dir)
    coeffs, worst = _angular_fit(phase, wedge, x, grad, degree)

    xi = wedge.members.astype(np.float64)
    radius = np.hypot(xi[:, 0], xi[:, 1])
    theta = np.arctan2(xi[:, 1], xi[:, 0])
    half = 0.5 * (wedge.theta_hi - wedge.theta_lo)
    s = np.angle(np.exp(1j * (theta - wedge.center_angle))) / half
    kernel_err = 2 * np.pi * radius.max() * worst
    if kernel_err > eps / 2:
        raise ValueError(
            f"angular fit of order {degree} misses by {kernel_err:.3g} on wedge {wedge.ell} (budget {eps / 2:.3g})"
        )

    basis = _cheb(s, degree)
    budget = eps / (degree + 1)
    fx = np.ones((n * n, 1), dtype=np.complex128)
    fxi = np.ones((wedge.size, 1), dtype=np.complex128)
    for k in range(degree + 1):
        c = coeffs[:, k]
        v = radius * basis[:, k]
        scale_x = 2 * np.pi * np.abs(c).max()
        scale_xi = np.abs(v).max()
        a_bound = scale_x * scale_xi
        if a_bound < budget:
            continue
        d = int(math.ceil(rank_bound_lemma1(a_bound, budget)))
        gx = _exp_series(2j * np.pi * c / scale_x, a_bound, d)
        gxi = (v / scale_xi)[:, None] ** np.arange(d)
        # the series length d overstates the factor's rank; trim before merging
        gx, gxi = compress_pair(fx[:, :1] ** 0, fxi[:, :1] ** 0, gx, gxi, budget)
        fx, fxi = compress_pair(fx, fxi, gx, gxi, budget)

    return SeparatedKernel(
        ell=wedge.ell,
        n=n,
        rank=fx.shape[1],
        mode="explicit",
        epsilon=eps,
        gamma_x=fx,
        gamma_xi=fxi,
    )


# --------------------------------------------------------------------------
# expansion and error estimate


def _rows_of(x_block, total: int) -> np.ndarray:
    if x_block is None:
        return np.arange(total, dtype=np.int64)
    if isinstance(x_block, slice):
        start, stop, step = x_block.indices(total)
        if x_block.stop is not None and x_block.stop > total:
            raise ValueError("block out of range")
        return np.arange(start, stop, step, dtype=np.int64)
    if isinstance(x_block, range):
        x_block = np.asarray(x_block)
    rows = np.atleast_1d(np.asarray(x_block, dtype=np.int64))
    if rows.size and (rows.min() < 0 or rows.max() >= total):
        raise ValueError("block out of range")
    return rows


def expand_factors(
    kernel: SeparatedKernel,
    phase: PhaseSpec,
    amplitude: AmplitudeSpec,
    wedge: Wedge,
    x_block=None,
    sampler: KernelSampler | None = None,
):
    """Rows of ``gamma_x`` for ``x_block`` and the full ``gamma_xi`` (|W| x q)."""
    if kernel.mode != "skeleton":
        raise ValueError("expand_factors needs a skeleton kernel")
    if sampler is None:
        sampler = KernelSampler(phase, amplitude, wedge, kernel.n)
    rows = _rows_of(x_block, sampler.shape[0])
    gx = sampler.block(rows, kernel.cols) @ kernel.core1
    gxi = (kernel.core2 @ sampler.block(kernel.rows, np.arange(wedge.size))).T
    return gx, gxi


def factor_rows(kernel: SeparatedKernel, sampler: KernelSampler, rows) -> np.ndarray:
    if kernel.mode == "explicit":
        return kernel.gamma_x[rows]
    return sampler.block(rows, kernel.cols) @ kernel.core1


def factor_cols(kernel: SeparatedKernel, sampler: KernelSampler, cols) -> np.ndarray:
    if kernel.mode == "explicit":
        return kernel.gamma_xi[cols]
    return (kernel.core2 @ sampler.block(kernel.rows, cols)).T


def sampled_error(
    kernel: SeparatedKernel,
    phase: PhaseSpec,
    amplitude: AmplitudeSpec,
    wedge: Wedge,
    s: int = 200,
    seed: int = 0,
) -> float:
    """Frobenius relative error of the factorization on a random ``s x s`` submatrix."""
    if s < 2:
        raise ValueError("s must be at least 2")
    sampler = KernelSampler(phase, amplitude, wedge, kernel.n)
    n_rows, n_cols = sampler.shape
    rng = np.random.default_rng([int(seed), int(wedge.ell), 1])
    rows = np.sort(rng.choice(n_rows, size=min(s, n_rows), replace=False))
    cols = np.sort(rng.choice(n_cols, size=min(s, n_cols), replace=False))
    exact = sampler.block(rows, cols)
    approx = factor_rows(kernel, sampler, rows) @ factor_cols(kernel, sampler, cols).T
    den = np.linalg.norm(exact)
    return float(np.linalg.norm(exact - approx) / den) if den > 0 else float(np.linalg.norm(approx))


def separate_partition(
    phase: PhaseSpec,
    amplitude: AmplitudeSpec,
    partition,
    config: SeparationConfig,
    method: str = "randomized",
    threads: int = 1,
) -> list[SeparatedKernel]:
    """Factorize every nonempty wedge; results are ordered by wedge index."""
    if method == "randomized":
        def job(w):
            return separate_randomized(phase, amplitude, w, config)
    elif method == "deterministic":
        if not amplitude.constant_one:
            raise ValueError("the deterministic route supports constant amplitude only")

        def job(w):
            return separate_deterministic(phase, w, config, partition.n)
    else:
        raise ValueError(f"unknown separation method {method!r}")
    wedges = [w for w in partition if w.size]
    if threads <= 1:
        return [job(w) for w in wedges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, wedges))
