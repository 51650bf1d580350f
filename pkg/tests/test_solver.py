import numpy as np
import pytest

from capillary import (EnergyParams, capillary_energy, make_flat_disk,
                       make_spherical_cap, make_wall_strip)
from capillary.solver import (RelaxOptions, density_class_values, relax, residuals)
from conftest import deep_interior_mask, perturbed_cap, smooth_noise


def test_exact_cap_already_converged(halfspace):
    m = make_spherical_cap(halfspace, np.pi / 3, 1.0, level=4)
    p = EnergyParams(c=2.0, theta=np.pi / 3)
    rep = relax(m, halfspace, p, RelaxOptions(tol_grad=1e-3))
    assert rep.converged
    assert rep.iterations <= 2
    assert np.abs(rep.final_mesh.vertices - m.vertices).max() < 1e-8


def test_relax_perturbed_hemisphere(halfspace):
    m0 = perturbed_cap(halfspace, np.pi / 2, 4)
    p = EnergyParams(c=2.0, theta=np.pi / 2)
    rep = relax(m0, halfspace, p, RelaxOptions(volume_lock=True))
    assert rep.converged
    assert rep.residuals.max_angle_residual <= 0.03
    assert rep.residuals.max_mean_curvature_residual <= 0.06


def test_energy_monotonicity(halfspace):
    m0 = perturbed_cap(halfspace, np.pi / 2, 3)
    p = EnergyParams(c=2.0, theta=np.pi / 2)
    rep = relax(m0, halfspace, p, RelaxOptions(max_iter=120, volume_lock=True))
    hist = np.array(rep.energy_history)
    assert np.all(np.diff(hist) <= 1e-12)


def test_saddle_detection_disk(ball):
    # plain (unlocked) descent flows away from the unstable disk
    m = make_flat_disk(ball, level=3)
    xi = smooth_noise(m, seed=2, amp=0.01)
    v = m.vertices.copy()
    interior = ~m.boundary_vertices
    v[interior, 2] += xi[interior] + 0.02
    m0 = m.replace_vertices(v)
    p = EnergyParams(c=0.0, theta=np.pi / 2)
    e_disk = capillary_energy(make_flat_disk(ball, level=3), ball, p)
    rep = relax(m0, ball, p, RelaxOptions(max_iter=400, volume_lock=False))
    assert rep.final_energy < e_disk - 1e-3


def test_residual_split_converges(halfspace):
    vals = {}
    p = EnergyParams(c=2.0, theta=np.pi / 3)
    for level in (4, 5):
        rep = relax(perturbed_cap(halfspace, np.pi / 3, level), halfspace, p,
                    RelaxOptions(volume_lock=True))
        vals[level] = (rep.residuals.max_mean_curvature_residual,
                       rep.residuals.max_angle_residual)
    assert vals[5][0] <= 0.05 and vals[5][1] <= 0.02
    assert vals[4][0] / vals[5][0] >= 1.8
    assert vals[4][1] / vals[5][1] >= 1.8


def test_density_class_values():
    table = density_class_values(np.pi / 3)
    assert table["halfPlane"] == pytest.approx(0.75)
    assert table["twoSheets"] == 1.0
    assert table["touchingHigh"] == pytest.approx(1.5)
    assert table["doubleTouchWall"] == pytest.approx(2.5)


def test_density_scan_vertical_plane(halfspace):
    # plane through the wall at angle pi/2: density 1/2 (+ zero wetted term)
    strip = make_wall_strip(halfspace, np.pi / 2, width=3.0, height=1.5, level=4)
    p = EnergyParams(c=0.0, theta=np.pi / 2)
    rep = residuals(strip, halfspace, p, probe_points=[[0.0, 0.0, 0.0]])
    name, value = rep.boundary_density_class[0]
    assert name == "halfPlane"
    assert abs(value - 0.5) < 0.05
    assert rep.monotone


def test_density_scan_cap(halfspace):
    m = make_spherical_cap(halfspace, np.pi / 3, 1.0, level=5)
    p = EnergyParams(c=2.0, theta=np.pi / 3)
    probe = m.vertices[m.wall_vertices][0]
    rep = residuals(m, halfspace, p, probe_points=[probe])
    name, value = rep.boundary_density_class[0]
    assert name == "halfPlane"
    assert abs(value - 0.75) < 0.05
    assert rep.monotone


def test_density_scan_wedge(halfspace):
    # two half-planes meeting at the wall line at angles theta and pi - theta:
    # the fold carries no wall measure, so the density is 1
    theta = np.pi / 3
    h = 1.5
    n = 24
    us = np.linspace(-1.5, 1.5, 2 * n + 1)
    vs = np.linspace(0.0, h, n + 1)
    slope1 = np.array([np.cos(theta), 0.0, np.sin(theta)])
    slope2 = np.array([-np.cos(theta), 0.0, np.sin(theta)])
    verts = []
    for u in us:
        for v in vs:
            verts.append(u * np.array([0.0, 1.0, 0.0]) + v * slope1)
    base2 = len(verts)
    for u in us:
        for v in vs[1:]:
            verts.append(u * np.array([0.0, 1.0, 0.0]) + v * slope2)

    def vid1(i, j):
        return i * (n + 1) + j

    def vid2(i, j):
        return base2 + i * n + (j - 1) if j >= 1 else vid1(i, 0)

    tris = []
    for i in range(2 * n):
        for j in range(n):
            tris.append([vid1(i, j), vid1(i + 1, j), vid1(i + 1, j + 1)])
            tris.append([vid1(i, j), vid1(i + 1, j + 1), vid1(i, j + 1)])
            tris.append([vid2(i, j), vid2(i + 1, j + 1), vid2(i + 1, j)])
            tris.append([vid2(i, j), vid2(i, j + 1), vid2(i + 1, j + 1)])
    from capillary import CapillaryMesh

    mesh = CapillaryMesh(np.array(verts), np.array(tris), domain=halfspace,
                         allow_rim=True, validate=False)
    p = EnergyParams(c=0.0, theta=theta)
    rep = residuals(mesh, halfspace, p, probe_points=[[0.0, 0.0, 0.0]])
    name, value = rep.boundary_density_class[0]
    assert abs(value - 1.0) < 0.05
    assert name in ("twoSheets", "touchingLow")
