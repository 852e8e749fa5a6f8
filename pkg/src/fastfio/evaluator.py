"""Fast forward and adjoint FIO application plus direct-summation references.

The discrete operator is

    (L f)(x) = (1/N) sum_xi a(x, xi) exp(2 pi i Phi(x, xi)) fh(xi),

with ``fh = dft_forward(f)``.  The fast path splits the frequencies into
wedges, applies each wedge's separated kernel and evaluates the remaining
linear-phase sums with type-2 NUFFTs on the sheared wedge boxes.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import as_field, dft_forward, dft_inverse, frequency_points, spatial_points
from .nufft import make_plan, nufft_type1, nufft_type2
from .phases import AmplitudeSpec, PhaseSpec
from .separation import (
    KernelSampler,
    NotCertifiedWarning,
    SeparatedKernel,
    SeparationConfig,
    factor_cols,
    factor_rows,
    separate_partition,
)
from .wedges import Wedge, WedgePartition, build_partition

DIRECT_MAX_N = 256
ROW_CHUNK = 8192
DIRECT_CHUNK_ENTRIES = 1 << 21


@dataclass(eq=False)
class FioOperator:
    phase: PhaseSpec
    amplitude: AmplitudeSpec
    partition: WedgePartition
    kernels: list[Optional[SeparatedKernel]]
    nufft_preset: str = "six_digit"
    epsilon: float = 1e-3
    method: str = "randomized"
    build_seconds: float = 0.0
    cache_factors: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.kernels) != len(self.partition):
            raise ValueError("need one kernel slot per wedge")
        for ell, k in enumerate(self.kernels):
            if k is None:
                if self.partition[ell].size:
                    raise ValueError(f"missing kernel for nonempty wedge {ell}")
                continue
            if k.ell != ell or k.n != self.n:
                raise ValueError(f"kernel {ell} does not match its wedge")

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def ranks(self) -> list[int]:
        return [k.rank if k is not None else 0 for k in self.kernels]

    @property
    def certified(self) -> bool:
        return all(k.certified for k in self.kernels if k is not None)

    @property
    def stored_bytes(self) -> int:
        return sum(k.stored_bytes for k in self.kernels if k is not None)

    def warped_points(self, ell: int) -> np.ndarray:
        """Targets ``M^{-T} grad_xi Phi(x, center_l)`` for wedge ``ell`` (N^2 x 2)."""
        wedge = self.partition[ell]
        grad = KernelSampler(self.phase, self.amplitude, wedge).grad
        return grad @ wedge.shear_inv.astype(np.float64)

    def _wedge_data(self, ell: int):
        hit = self._cache.get(ell)
        if hit is not None:
            return hit
        wedge = self.partition[ell]
        kernel = self.kernels[ell]
        sampler = KernelSampler(self.phase, self.amplitude, wedge)
        z = sampler.grad @ wedge.shear_inv.astype(np.float64)
        center = np.exp(2j * np.pi * (z @ wedge.center_freq.astype(np.float64)))
        gxi = factor_cols(kernel, sampler, np.arange(wedge.size))  # |W| x q
        slots = wedge.members @ wedge.shear.T - wedge.center_freq - wedge.box_lo
        plan = make_plan(*wedge.box_shape, preset=self.nufft_preset)
        gx = None
        if self.cache_factors:
            gx = factor_rows(kernel, sampler, np.arange(self.n * self.n))
        data = (wedge, kernel, sampler, z, center, gxi, slots, plan, gx)
        if self.cache_factors:
            self._cache[ell] = data
        return data

    def _rows_factor(self, data, rows):
        wedge, kernel, sampler, *_, gx = data
        if gx is not None:
            return gx[rows]
        return factor_rows(kernel, sampler, rows)


def build_operator(
    phase: PhaseSpec,
    amplitude: AmplitudeSpec,
    n: int,
    epsilon: float = 1e-3,
    method: str = "randomized",
    seed: int = 0,
    nufft_preset: str = "six_digit",
    threads: int = 1,
    cache_factors: bool = False,
    config: SeparationConfig | None = None,
) -> FioOperator:
    """Partition the frequencies and factorize every wedge's kernel."""
    partition = build_partition(n)
    if config is None:
        config = SeparationConfig(epsilon=epsilon, seed=seed)
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotCertifiedWarning)
        found = separate_partition(phase, amplitude, partition, config, method=method, threads=threads)
    elapsed = time.perf_counter() - t0
    kernels: list[Optional[SeparatedKernel]] = [None] * len(partition)
    for k in found:
        kernels[k.ell] = k
    return FioOperator(
        phase=phase,
        amplitude=amplitude,
        partition=partition,
        kernels=kernels,
        nufft_preset=nufft_preset,
        epsilon=config.epsilon,
        method=method,
        build_seconds=elapsed,
        cache_factors=cache_factors,
    )


def _zero_amplitude(op: FioOperator) -> np.ndarray:
    x = spatial_points(op.n)
    return op.amplitude(x, np.zeros(2))


def _run(jobs, fn, threads: int):
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _warn_uncertified(op: FioOperator):
    if not op.certified:
        bad = [k.ell for k in op.kernels if k is not None and not k.certified]
        warnings.warn(f"wedges {bad} carry non-certified factorizations", NotCertifiedWarning)


def apply_forward(op: FioOperator, f, threads: int = 1) -> np.ndarray:
    """Fast ``L f``; per-wedge partial sums are merged in wedge order."""
    n = op.n
    f = as_field(f, n)
    _warn_uncertified(op)
    fh = dft_forward(f).ravel()

    def wedge_part(ell):
        data = op._wedge_data(ell)
        wedge, kernel, _, z, center, gxi, slots, plan, _ = data
        q = kernel.rank
        coeffs = np.zeros((q,) + wedge.box_shape, dtype=np.complex128)
        coeffs[:, slots[:, 0], slots[:, 1]] = gxi.T * fh[wedge.member_index]
        g = nufft_type2(coeffs, z, plan, offset=wedge.box_lo)  # q x N^2
        out = np.empty(n * n, dtype=np.complex128)
        for lo in range(0, n * n, ROW_CHUNK):
            rows = np.arange(lo, min(lo + ROW_CHUNK, n * n))
            u = op._rows_factor(data, rows)
            out[rows] = np.einsum("pt,tp->p", u, g[:, rows])
        return out * center

    active = [ell for ell, k in enumerate(op.kernels) if k is not None]
    parts = _run(active, wedge_part, threads)
    total = _zero_amplitude(op) * fh[0]
    for part in parts:
        total = total + part
    return (total / n).reshape(n, n)


def apply_adjoint(op: FioOperator, f, threads: int = 1) -> np.ndarray:
    """Fast ``L* f`` via type-1 NUFFTs, mirroring :func:`apply_forward`."""
    n = op.n
    f = as_field(f, n).ravel()
    _warn_uncertified(op)

    def wedge_part(ell):
        data = op._wedge_data(ell)
        wedge, kernel, _, z, center, gxi, slots, plan, _ = data
        q = kernel.rank
        vals = np.empty((q, n * n), dtype=np.complex128)
        for lo in range(0, n * n, ROW_CHUNK):
            rows = np.arange(lo, min(lo + ROW_CHUNK, n * n))
            vals[:, rows] = op._rows_factor(data, rows).conj().T
        vals *= f * center.conj()
        big = nufft_type1(vals, z, plan, offset=wedge.box_lo)  # q x box
        return np.einsum("jt,tj->j", gxi.conj(), big[:, slots[:, 0], slots[:, 1]])

    active = [ell for ell, k in enumerate(op.kernels) if k is not None]
    parts = _run(active, wedge_part, threads)
    gh = np.zeros(n * n, dtype=np.complex128)
    gh[0] = np.sum(_zero_amplitude(op).conj() * f)
    for ell, part in zip(active, parts):
        gh[op.partition[ell].member_index] += part
    return dft_inverse((gh / n).reshape(n, n))


# --------------------------------------------------------------------------
# direct references


def _guard(n: int, max_n: int | None):
    limit = DIRECT_MAX_N if max_n is None else max_n
    if n > limit:
        raise ValueError(f"direct evaluation is O(N^4); N = {n} exceeds the guard {limit}")


def _kernel_rows(phase, amplitude, x, xi):
    k = np.exp(2j * np.pi * phase(x[:, None, :], xi[None, :, :]))
    if not amplitude.constant_one:
        k *= amplitude(x[:, None, :], xi[None, :, :])
    return k


def direct_at(phase: PhaseSpec, amplitude: AmplitudeSpec, f, rows) -> np.ndarray:
    """Exact ``(L f)(x)`` at flat spatial indices ``rows`` (O(len(rows) N^2))."""
    f = as_field(f)
    n = f.shape[0]
    fh = dft_forward(f).ravel()
    xi = frequency_points(n).astype(np.float64)
    x = spatial_points(n)[np.asarray(rows, dtype=np.int64)]
    step = max(1, DIRECT_CHUNK_ENTRIES // (n * n))
    out = np.empty(len(x), dtype=np.complex128)
    for lo in range(0, len(x), step):
        out[lo : lo + step] = _kernel_rows(phase, amplitude, x[lo : lo + step], xi) @ fh
    return out / n


def apply_direct(phase: PhaseSpec, amplitude: AmplitudeSpec, f, max_n: int | None = None) -> np.ndarray:
    f = as_field(f)
    n = f.shape[0]
    _guard(n, max_n)
    return direct_at(phase, amplitude, f, np.arange(n * n)).reshape(n, n)


def direct_adjoint_hat(phase: PhaseSpec, amplitude: AmplitudeSpec, f, cols) -> np.ndarray:
    """``(1/N) sum_y conj(a) exp(-2 pi i Phi(y, xi)) f(y)`` at flat frequency indices ``cols``."""
    f = as_field(f)
    n = f.shape[0]
    xi = frequency_points(n).astype(np.float64)[np.asarray(cols, dtype=np.int64)]
    y = spatial_points(n)
    fv = f.ravel()
    step = max(1, DIRECT_CHUNK_ENTRIES // (n * n))
    out = np.empty(len(xi), dtype=np.complex128)
    for lo in range(0, len(xi), step):
        k = _kernel_rows(phase, amplitude, y, xi[lo : lo + step])  # N^2 x chunk
        out[lo : lo + step] = k.conj().T @ fv
    return out / n


def apply_direct_adjoint(phase: PhaseSpec, amplitude: AmplitudeSpec, f, max_n: int | None = None) -> np.ndarray:
    f = as_field(f)
    n = f.shape[0]
    _guard(n, max_n)
    gh = direct_adjoint_hat(phase, amplitude, f, np.arange(n * n))
    return dft_inverse(gh.reshape(n, n))


def sample_points(n: int, s: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n * n, size=min(int(s), n * n), replace=False))


def sampled_relative_error(fast_out, phase: PhaseSpec, amplitude: AmplitudeSpec, f, s: int = 100, seed: int = 0) -> float:
    """``sqrt(sum |Lf - fast|^2 / sum |Lf|^2)`` over ``s`` random points."""
    if s < 1:
        raise ValueError("s must be positive")
    fast = np.asarray(fast_out).ravel()
    n = as_field(f).shape[0]
    rows = sample_points(n, s, seed)
    exact = direct_at(phase, amplitude, f, rows)
    den = np.linalg.norm(exact)
    diff = np.linalg.norm(exact - fast[rows])
    return float(diff / den) if den > 0 else float(diff)


def wavefront_experiment(op: FioOperator, f, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    if op.n > 512:
        raise ValueError("wavefront experiment limited to N <= 512")
    lf = apply_forward(op, f, threads)
    return lf, apply_adjoint(op, lf, threads)
