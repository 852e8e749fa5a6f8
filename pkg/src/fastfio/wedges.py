"""Equiangular frequency wedges with parabolic scaling.

``w = round(sqrt(N))`` wedges; wedge ``l`` covers the half-open angular range
``[(2l-1) pi / w, (2l+1) pi / w)``.  Each wedge also carries an integer
shear ``M`` and a center frequency ``xi_c`` so that ``M xi - xi_c`` packs the
wedge into a small box centered on the origin (used by the NUFFT stage).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import check_side, frequency_points, freq_index

_TIE_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class Wedge:
    ell: int
    theta_lo: float
    theta_hi: float
    center_dir: np.ndarray
    members: np.ndarray  # (k, 2) integer frequency labels, xi != 0
    member_index: np.ndarray  # (k,) flat storage indices into the frequency grid
    shear: np.ndarray  # (2, 2) integer, det 1
    center_freq: np.ndarray  # (2,) integer
    box_lo: np.ndarray  # (2,) inclusive lower corner of M xi - xi_c
    box_hi: np.ndarray  # (2,) inclusive upper corner
    n: int = 0  # grid side

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def box_shape(self) -> tuple[int, int]:
        s = self.box_hi - self.box_lo + 1
        return int(s[0]), int(s[1])

    @property
    def shear_inv(self) -> np.ndarray:
        return _int_inverse(self.shear)

    @property
    def is_diagonal(self) -> bool:
        return bool(self.shear[1, 0] != 0)

    @property
    def center_angle(self) -> float:
        return 0.5 * (self.theta_lo + self.theta_hi)


@dataclass(frozen=True, eq=False)
class WedgePartition:
    n: int
    w: int
    wedges: list[Wedge]
    zero_home: int = 0
    owner: np.ndarray = field(repr=False, default=None)  # (n*n,) wedge of each storage slot

    def __len__(self):
        return self.w

    def __iter__(self):
        return iter(self.wedges)

    def __getitem__(self, ell):
        return self.wedges[ell]

    def wedge_of(self, xi) -> int:
        return wedge_of(self, xi)


def _int_inverse(m: np.ndarray) -> np.ndarray:
    a, b = m[0]
    c, d = m[1]
    det = a * d - b * c
    if det != 1:
        raise ValueError("shear matrix must have determinant 1")
    return np.array([[d, -b], [-c, a]], dtype=np.int64)


def angle_index(xi, w: int) -> np.ndarray:
    """Wedge index of nonzero frequencies ``xi`` (shape ``(..., 2)``)."""
    xi = np.asarray(xi, dtype=np.float64)
    theta = np.arctan2(xi[..., 1], xi[..., 0])
    aperture = 2 * np.pi / w
    t = (theta + np.pi / w) / aperture
    return np.mod(np.floor(t + _TIE_GUARD).astype(np.int64), w)


def _shear_for(center_angle: float) -> np.ndarray:
    red = np.mod(center_angle, np.pi / 2)
    if np.pi / 8 <= red < 3 * np.pi / 8:
        # push the diagonal direction onto the nearest axis: (a, b) -> (a, b -/+ a)
        s = -1 if np.cos(center_angle) * np.sin(center_angle) > 0 else 1
        return np.array([[1, 0], [s, 1]], dtype=np.int64)
    return np.eye(2, dtype=np.int64)


def build_partition(n: int) -> WedgePartition:
    n = check_side(n)
    if n < 4:
        raise ValueError("grid side must be at least 4")
    w = int(round(np.sqrt(n)))
    pts = frequency_points(n)
    nonzero = np.any(pts != 0, axis=1)
    owner = np.zeros(n * n, dtype=np.int64)
    owner[nonzero] = angle_index(pts[nonzero], w)
    zero_slot = int(freq_index(n, (0, 0)))
    owner[zero_slot] = 0

    wedges = []
    for ell in range(w):
        sel = np.flatnonzero((owner == ell) & nonzero)
        members = pts[sel]
        center = 2 * np.pi * ell / w
        m = _shear_for(center)
        if len(members):
            sheared = members @ m.T
            lo, hi = sheared.min(axis=0), sheared.max(axis=0)
            c = (lo + hi) // 2
        else:
            lo = hi = c = np.zeros(2, dtype=np.int64)
        wedges.append(
            Wedge(
                ell=ell,
                theta_lo=(2 * ell - 1) * np.pi / w,
                theta_hi=(2 * ell + 1) * np.pi / w,
                center_dir=np.array([np.cos(center), np.sin(center)]),
                members=members,
                member_index=sel,
                shear=m,
                center_freq=c.astype(np.int64),
                box_lo=(lo - c).astype(np.int64),
                box_hi=(hi - c).astype(np.int64),
                n=n,
            )
        )
    return WedgePartition(n=n, w=w, wedges=wedges, zero_home=0, owner=owner)


def wedge_of(partition: WedgePartition, xi) -> int:
    idx = freq_index(partition.n, xi)
    return int(partition.owner[int(idx)])


def shear_map(wedge: Wedge, xi, check: bool = True) -> np.ndarray:
    """``xi' = M xi - xi_c`` for member frequencies ``xi`` (shape ``(..., 2)``)."""
    xi = np.asarray(xi, dtype=np.int64)
    if check:
        keys = set(map(tuple, wedge.members.tolist()))
        for row in xi.reshape(-1, 2).tolist():
            if tuple(row) not in keys:
                raise ValueError(f"frequency {tuple(row)} is not a member of wedge {wedge.ell}")
    return xi @ wedge.shear.T - wedge.center_freq


def unshear(wedge: Wedge, xi_prime) -> np.ndarray:
    xi_prime = np.asarray(xi_prime, dtype=np.int64)
    return (xi_prime + wedge.center_freq) @ wedge.shear_inv.T
