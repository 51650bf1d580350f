import numpy as np
import pytest

from capillary import AmbientDomain, EnergyParams
from capillary.errors import GridMismatch, InfeasibleConstraint
from capillary.oracles import brute_force_replacement
from capillary.region import (flat_distance, make_region, read_capreg, region_energy,
                              replace, replay_trajectory, write_capreg)


def test_empty_region(ball):
    r = make_region(ball, n=24)
    p = EnergyParams(c=1.0, theta=np.pi / 3)
    re = region_energy(r, ball, p)
    assert re.energy == 0.0
    assert re.split.interior_perimeter == 0.0
    assert re.split.wall_area == 0.0
    assert re.volume == 0.0


def test_full_ball_region(ball):
    # Omega = M: only the weighted wall term and the volume remain
    r = make_region(ball, n=64)
    r.occupancy[:] = r.mask
    p = EnergyParams(c=1.0, theta=np.pi / 3)
    re = region_energy(r, ball, p)
    exact = np.cos(np.pi / 3) * 4 * np.pi - 4 * np.pi / 3
    assert re.split.interior_perimeter == 0.0
    assert abs(re.split.wall_area / (4 * np.pi) - 1) < 0.005
    assert abs(re.volume / (4 * np.pi / 3) - 1) < 0.01
    assert abs(re.energy - exact) < 0.03 * abs(exact)


def test_half_ball_region(ball):
    r = make_region(ball, n=64)
    occ = np.zeros(r.shape)
    occ[:, :, 32:] = 1.0
    r = make_region(ball, n=64, occupancy=occ)
    re = region_energy(r, ball, EnergyParams(c=0.0, theta=np.pi / 2))
    assert abs(re.energy / np.pi - 1) < 0.03


def test_voxel_sphere_perimeter(ball):
    for n, tol in ((32, 0.03), (64, 0.03)):
        r = make_region(ball, n=n)
        c = r.cell_centers()
        radius = 0.6
        r.occupancy = (np.linalg.norm(c, axis=-1) < radius).astype(float)
        re = region_energy(r, ball, EnergyParams(c=0.0, theta=np.pi / 2))
        assert abs(re.split.interior_perimeter / (4 * np.pi * radius**2) - 1) < tol


def test_flat_distance(ball):
    r1 = make_region(ball, n=16)
    r2 = r1.copy()
    assert flat_distance(r1, r2) == 0.0
    r2.occupancy[8, 8, 8] = 1.0
    assert flat_distance(r1, r2) == pytest.approx(r1.spacing**3)
    r3 = r1.copy()
    r3.occupancy = r3.mask.astype(float)
    comp = r3.copy()
    comp.occupancy = r3.mask - r3.occupancy
    assert flat_distance(r3, comp) == pytest.approx(r3.volume)


def test_flat_distance_grid_mismatch(ball):
    with pytest.raises(GridMismatch):
        flat_distance(make_region(ball, n=16), make_region(ball, n=24))


def test_capreg_roundtrip(tmp_path, ball):
    r = make_region(ball, n=16)
    rng = np.random.default_rng(0)
    r.occupancy = ((rng.random(r.shape) < 0.4) & (r.mask == 1)).astype(float)
    path = tmp_path / "region.capreg"
    write_capreg(r, path)
    r2 = read_capreg(path, ball)
    assert r2.shape == r.shape
    assert r2.spacing == pytest.approx(r.spacing)
    assert np.array_equal(r2.occupancy, r.occupancy)


def test_replace_infeasible_delta(halfspace):
    r = make_region(halfspace, n=8)
    p = EnergyParams(c=0.0, theta=np.pi / 2)
    with pytest.raises(InfeasibleConstraint):
        replace(r, halfspace, p, [(2, 2, 2)], delta=0.5 * r.spacing**3)


def test_replace_empty_k(halfspace):
    r = make_region(halfspace, n=8)
    r.occupancy[:, :, :2] = r.mask[:, :, :2]
    p = EnergyParams(c=0.5, theta=np.pi / 3)
    res = replace(r, halfspace, p, [], delta=1.0)
    assert np.array_equal(res.region.occupancy, r.occupancy)
    assert res.trajectory == [frozenset()]


def test_replace_notch_filled(halfspace):
    # wedge notch in a flat half-space interface: replacement fills it
    r = make_region(halfspace, n=12)
    r.occupancy[:, :, :4] = r.mask[:, :, :4]
    r.occupancy[5, 5, 3] = 0.0
    r.occupancy[5, 6, 3] = 0.0
    p = EnergyParams(c=0.0, theta=np.pi / 2)
    e0 = region_energy(r, halfspace, p).energy
    cells = [(5, 5, 3), (5, 6, 3), (6, 5, 3)]
    res = replace(r, halfspace, p, cells, delta=4 * r.spacing**3, seed=1)
    e1 = region_energy(res.region, halfspace, p).energy
    assert e1 < e0 - 0.3 * r.spacing**2  # at least a facet's worth
    assert res.region.occupancy[5, 5, 3] == 1.0
    assert res.region.occupancy[5, 6, 3] == 1.0


def test_replace_never_increases_and_idempotent(halfspace):
    rng = np.random.default_rng(5)
    p = EnergyParams(c=0.5, theta=np.pi / 2.5)
    r = make_region(halfspace, n=8)
    r.occupancy = ((rng.random(r.shape) < 0.5) & (r.mask == 1)).astype(float)
    r.occupancy[:, :, :2] = r.mask[:, :, :2]
    cells = [(i, j, k) for i in range(3, 6) for j in range(3, 6) for k in range(2, 4)]
    cells = cells[:10]
    delta = 3 * r.spacing**3
    res1 = replace(r, halfspace, p, cells, delta, seed=7)
    e0 = region_energy(r, halfspace, p).energy
    e1 = region_energy(res1.region, halfspace, p).energy
    assert e1 <= e0 + 1e-12
    res2 = replace(res1.region, halfspace, p, cells, delta, seed=7)
    e2 = region_energy(res2.region, halfspace, p).energy
    assert e2 == pytest.approx(e1)
    assert np.array_equal(res2.region.occupancy, res1.region.occupancy)


def test_replace_matches_brute_force(halfspace):
    rng = np.random.default_rng(42)
    p = EnergyParams(c=0.5, theta=np.pi / 2.5)
    for trial in range(8):
        r = make_region(halfspace, n=8)
        occ = (rng.random(r.shape) < 0.5) & (r.mask == 1)
        occ[:, :, :2] |= r.mask[:, :, :2] == 1
        r.occupancy = occ.astype(float)
        i0 = rng.integers(1, 5, size=3)
        cells = [(int(i0[0]) + a, int(i0[1]) + b, int(i0[2]) + c)
                 for a in range(2) for b in range(2) for c in range(3)]
        delta = 3 * r.spacing**3
        e_best, _, _ = brute_force_replacement(r, halfspace, p, cells, delta, max_batch=1)
        res = replace(r, halfspace, p, cells, delta, seed=trial)
        e_repl = region_energy(res.region, halfspace, p).energy
        assert e_repl == pytest.approx(e_best, abs=1e-9)
        ok, info = replay_trajectory(r, halfspace, p, res.trajectory, cells, delta)
        assert ok, info


def test_relaxed_gradient_matches_fd(ball):
    from capillary.region import relaxed_gradient

    rng = np.random.default_rng(1)
    r = make_region(ball, n=12)
    r.occupancy = np.where(r.mask == 1, rng.random(r.shape), 0.0)
    r.binary = False
    p = EnergyParams(c=0.7, theta=np.pi / 3)
    eps = 1e-3

    def smoothed_energy(reg):
        from capillary import _core
        from capillary._stencil import OFFSETS, WEIGHTS

        occ = np.ascontiguousarray(reg.extended_occupancy())
        pm = reg.ghost_mask
        # eps-smoothed pair energy matching relaxed_gradient
        total = 0.0
        for off, w in zip(OFFSETS, WEIGHTS):
            s1 = tuple(slice(max(0, -o), occ.shape[k] - max(0, o))
                       for k, o in enumerate(off))
            s2 = tuple(slice(max(0, o), occ.shape[k] - max(0, -o))
                       for k, o in enumerate(off))
            both = (pm[s1] > 0) & (pm[s2] > 0)
            d = occ[s1][both] - occ[s2][both]
            total += w * np.sqrt(d * d + eps * eps).sum()
        total *= reg.spacing**2
        total += p.cos_theta * float((reg.occupancy * reg.wall_patch).sum())
        total -= p.c * reg.volume
        return total

    g = relaxed_gradient(r, ball, p, eps=eps)
    for _ in range(4):
        i, j, k = (int(x) for x in np.argwhere(r.mask == 1)[rng.integers((r.mask == 1).sum())])
        t = 1e-6
        rp = r.copy(); rp.occupancy[i, j, k] += t
        rm = r.copy(); rm.occupancy[i, j, k] -= t
        fd = (smoothed_energy(rp) - smoothed_energy(rm)) / (2 * t)
        assert abs(g[i, j, k] - fd) < 1e-6 * max(1.0, abs(fd))
