"""Binary storage of skeleton factorizations.

Layout (little-endian): magic ``FIOSEP1\\0``; u32 N; u32 kernel count; then per
kernel u32 ell, u32 r, u32 q, r x u32 column indices, r x u32 row indices,
r*q complex128 ``core1`` (row-major) and q*r complex128 ``core2``.  Column
indices are positions in the wedge's member list; row indices are flat
spatial indices.
"""

from __future__ import annotations

import io
import os
import struct

import numpy as np

from .separation import SeparatedKernel

MAGIC = b"FIOSEP1\0"
_U32 = np.dtype("<u4")
_C128 = np.dtype("<c16")


class FormatError(ValueError):
    pass


def dumps(kernels, n: int) -> bytes:
    kernels = [k for k in kernels if k is not None]
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", int(n), len(kernels)))
    for k in kernels:
        if k.mode != "skeleton":
            raise ValueError("only skeleton factorizations can be stored")
        if k.n != n:
            raise ValueError(f"kernel {k.ell} was built for N = {k.n}, not {n}")
        r, q = k.samples, k.rank
        buf.write(struct.pack("<III", k.ell, r, q))
        buf.write(np.asarray(k.cols, dtype=_U32).tobytes())
        buf.write(np.asarray(k.rows, dtype=_U32).tobytes())
        buf.write(np.ascontiguousarray(k.core1, dtype=_C128).tobytes())
        buf.write(np.ascontiguousarray(k.core2, dtype=_C128).tobytes())
    return buf.getvalue()


def loads(data: bytes, epsilon: float = float("nan")) -> tuple[int, list[SeparatedKernel]]:
    view = memoryview(data)
    if len(view) < len(MAGIC) + 8 or bytes(view[: len(MAGIC)]) != MAGIC:
        raise FormatError("not a factorization file (bad magic)")
    pos = len(MAGIC)
    n, count = struct.unpack_from("<II", view, pos)
    pos += 8
    kernels = []

    def take(dtype, count_):
        nonlocal pos
        size = dtype.itemsize * count_
        if pos + size > len(view):
            raise FormatError("truncated factorization file")
        arr = np.frombuffer(view, dtype=dtype, count=count_, offset=pos).copy()
        pos += size
        return arr

    for _ in range(count):
        ell, r, q = (int(v) for v in take(_U32, 3))
        cols = take(_U32, r).astype(np.int64)
        rows = take(_U32, r).astype(np.int64)
        core1 = take(_C128, r * q).astype(np.complex128).reshape(r, q)
        core2 = take(_C128, q * r).astype(np.complex128).reshape(q, r)
        kernels.append(
            SeparatedKernel(
                ell=ell, n=n, rank=q, mode="skeleton", epsilon=epsilon,
                cols=cols, rows=rows, core1=core1, core2=core2,
            )
        )
    if pos != len(view):
        raise FormatError("trailing bytes after last kernel")
    return n, kernels


def save_factorization(path, kernels, n: int | None = None) -> int:
    """Write ``kernels``; returns the file size in bytes."""
    kernels = [k for k in kernels if k is not None]
    if n is None:
        if not kernels:
            raise ValueError("N is required when there are no kernels")
        n = kernels[0].n
    data = dumps(kernels, n)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load_factorization(path, epsilon: float = float("nan")) -> tuple[int, list[SeparatedKernel]]:
    with open(path, "rb") as fh:
        return loads(fh.read(), epsilon)


def file_size(path) -> int:
    return os.path.getsize(path)
