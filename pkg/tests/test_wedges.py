import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastfio.grid import freq_index
from fastfio.wedges import build_partition, shear_map, unshear, wedge_of


def test_wedge_count_and_center():
    part = build_partition(64)
    assert part.w == 8 and len(part) == 8
    assert np.allclose(part[0].center_dir, [1, 0])
    for w in part:
        assert np.isclose(w.theta_hi - w.theta_lo, np.pi / 4)


def test_known_memberships():
    part = build_partition(64)
    assert wedge_of(part, (16, 4)) == 0
    assert wedge_of(part, (10, 0)) == 0
    assert wedge_of(part, (-10, 0)) == 4
    assert part.zero_home == 0
    assert freq_index(64, (0, 0)) not in set(part[0].member_index.tolist())


def test_wedge_of_outside_grid():
    with pytest.raises(ValueError):
        wedge_of(build_partition(16), (8, 0))


@pytest.mark.parametrize("n", [4, 16, 36, 64, 100])
def test_partition_of_unity(n):
    part = build_partition(n)
    idx = np.concatenate([w.member_index for w in part])
    assert len(idx) + 1 == n * n
    assert len(np.unique(idx)) == len(idx)


@pytest.mark.parametrize("n", [16, 64, 100])
def test_member_angles_and_shear(n):
    part = build_partition(n)
    for w in part:
        if not w.size:
            continue
        th = np.arctan2(w.members[:, 1], w.members[:, 0])
        d = np.mod(th - w.theta_lo, 2 * np.pi)
        assert np.all(d < w.theta_hi - w.theta_lo + 1e-12)
        m = w.shear
        assert m.dtype.kind == "i" and round(np.linalg.det(m)) == 1
        packed = shear_map(w, w.members, check=False)
        assert np.all(packed.min(axis=0) == w.box_lo) and np.all(packed.max(axis=0) == w.box_hi)
        # centered: both extents differ by at most one
        assert np.all(np.abs(w.box_hi + w.box_lo) <= 1)
        assert np.array_equal(unshear(w, packed), w.members)


def test_shear_map_rejects_non_member():
    part = build_partition(16)
    with pytest.raises(ValueError):
        shear_map(part[0], [(-5, 0)])


def test_invalid_sides():
    for n in (2, 7, 15):
        with pytest.raises(ValueError):
            build_partition(n)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([16, 36, 64]), st.data())
def test_wedge_of_matches_angle(n, data):
    k = data.draw(st.tuples(st.integers(-n // 2, n // 2 - 1), st.integers(-n // 2, n // 2 - 1)))
    part = build_partition(n)
    ell = wedge_of(part, k)
    if k == (0, 0):
        assert ell == part.zero_home
    else:
        assert freq_index(n, k) in set(part[ell].member_index.tolist())
