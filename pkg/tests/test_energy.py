import numpy as np
import pytest

from capillary import (CapOracle, EnergyParams, capillary_energy, contact_angles,
                       energy_gradient, first_variation, make_flat_disk,
                       make_spherical_cap, make_subdivision_sphere, make_wall_strip,
                       measures)
from capillary.energy import random_admissible_field
from capillary.errors import NonTangentVariation
from conftest import perturbed_cap


def finite_difference(mesh, domain, params, X, t=1e-5):
    ep = capillary_energy(mesh.replace_vertices(mesh.vertices + t * X), domain, params)
    em = capillary_energy(mesh.replace_vertices(mesh.vertices - t * X), domain, params)
    return (ep - em) / (2 * t)


def test_hemisphere_energy(halfspace):
    m = make_spherical_cap(halfspace, np.pi / 2, 1.0, level=5)
    p = EnergyParams(c=2.0, theta=np.pi / 2)
    assert abs(capillary_energy(m, halfspace, p) / (2 * np.pi / 3) - 1) < 0.01


def test_cap_energy_oracle(halfspace):
    p = EnergyParams(c=2.0, theta=np.pi / 3)
    m = make_spherical_cap(halfspace, np.pi / 3, 1.0, level=5)
    assert abs(capillary_energy(m, halfspace, p) / CapOracle(np.pi / 3, 1.0).energy_at(2.0)
               - 1) < 0.01


def test_empty_energy(halfspace):
    from capillary import CapillaryMesh

    m = CapillaryMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int), domain=halfspace)
    assert capillary_energy(m, halfspace, EnergyParams(c=1.0, theta=1.0)) == 0.0


def test_zero_field_zero_variation(halfspace):
    m = make_spherical_cap(halfspace, np.pi / 3, 1.0, level=2)
    p = EnergyParams(c=2.0, theta=np.pi / 3)
    assert first_variation(m, halfspace, p, np.zeros_like(m.vertices)) == 0.0


def test_translation_invariance_closed_sphere(slab):
    s = make_subdivision_sphere(0.2, level=3, center=(0.0, 0.0, 0.5))
    s = type(s)(s.vertices, s.triangles, domain=slab)
    p = EnergyParams(c=1.0, theta=np.pi / 3)
    X = np.tile([1.0, 0.0, 0.0], (len(s.vertices), 1))
    assert abs(first_variation(s, slab, p, X)) < 1e-10


def test_dilation_finite_difference(halfspace):
    # radial dilation about the origin is wall-tangent on the wall plane
    m = make_spherical_cap(halfspace, np.pi / 3, 1.0, level=3)
    p = EnergyParams(c=2.0, theta=np.pi / 3)
    X = m.vertices.copy()
    fv = first_variation(m, halfspace, p, X)
    fd = finite_difference(m, halfspace, p, X)
    assert abs(fv - fd) <= 1e-6 * max(1.0, abs(fd))


def test_gradient_fd_agreement_random_fields(halfspace, ball):
    rng = np.random.default_rng(0)
    meshes = [
        (perturbed_cap(halfspace, np.pi / 3, 3, amp=0.02), halfspace),
        (make_flat_disk(ball, level=3), ball),
    ]
    p = EnergyParams(c=1.5, theta=np.pi / 3)
    for mesh, domain in meshes:
        for _ in range(10):
            X = random_admissible_field(mesh, domain, rng)
            fv = first_variation(mesh, domain, p, X)
            fd = finite_difference(mesh, domain, p, X)
            assert abs(fv - fd) <= 1e-5 * max(1.0, abs(fd))


def test_nontangent_variation_rejected(halfspace):
    m = make_spherical_cap(halfspace, np.pi / 2, 1.0, level=2)
    p = EnergyParams(c=2.0, theta=np.pi / 2)
    X = np.zeros_like(m.vertices)
    X[np.flatnonzero(m.wall_vertices)[0], 2] = 1.0
    with pytest.raises(NonTangentVariation):
        first_variation(m, halfspace, p, X)


def test_critical_cap_gradient_small(halfspace):
    for level in (4, 5):
        m = make_spherical_cap(halfspace, np.pi / 3, 1.0, level=level)
        p = EnergyParams(c=2.0, theta=np.pi / 3)
        g = energy_gradient(m, halfspace, p)
        h = m.max_edge_length()
        assert np.abs(g).max() <= 10 * h * h


def test_area_gradient_is_mean_curvature(halfspace):
    # c = 0: interior gradient density approximates H nu
    m = make_spherical_cap(halfspace, np.pi / 2, 1.0, level=5)
    p = EnergyParams(c=0.0, theta=np.pi / 2)
    g = energy_gradient(m, halfspace, p)
    va = m.vertex_areas()
    vn = m.vertex_normals()
    interior = ~m.boundary_vertices
    dens = g[interior] / va[interior, None]
    target = 2.0 * vn[interior]
    rel = np.linalg.norm(dens - target, axis=1) / 2.0
    assert np.median(rel) < 0.05


def test_disk_in_ball_symmetric_gradient(ball):
    m = make_flat_disk(ball, level=3)
    p = EnergyParams(c=0.0, theta=np.pi / 2)
    g = energy_gradient(m, ball, p)
    assert np.abs(g).max() < 1e-8


def test_youngs_law_emergence(halfspace):
    # one-parameter family of caps tilting the contact angle: the boundary
    # gradient along the wall conormal is proportional to cos(theta) - cos(psi).
    # c = 2/R keeps H = c on the whole family, isolating the line force.
    theta = np.pi / 3
    p = EnergyParams(c=2.0, theta=theta)

    def boundary_force(psi):
        cap = make_spherical_cap(halfspace, psi, 1.0, level=4)
        g = energy_gradient(cap, halfspace, p)
        cd = contact_angles(cap, halfspace)
        return sum(float(g[v] @ cd.nu_bar[k]) for k, v in enumerate(cd.indices)) \
            / (2 * np.pi * np.sin(psi))

    below = boundary_force(theta - 0.3)
    at = boundary_force(theta)
    above = boundary_force(theta + 0.3)
    assert below * above < 0
    assert abs(at) < 0.1 * max(abs(below), abs(above))
    # matches the smooth line density cos(theta) - cos(psi)
    for psi, val in ((theta - 0.3, below), (theta + 0.3, above)):
        assert abs(val - (np.cos(theta) - np.cos(psi))) < 0.02


def test_scaling_law(halfspace):
    m = make_spherical_cap(halfspace, np.pi / 3, 1.0, level=3)
    lam = 1.7
    m2 = m.replace_vertices(lam * m.vertices)
    e1 = capillary_energy(m, halfspace, EnergyParams(c=2.0, theta=np.pi / 3))
    e2 = capillary_energy(m2, halfspace, EnergyParams(c=2.0 / lam, theta=np.pi / 3))
    assert abs(e2 - lam**2 * e1) < 1e-10 * max(1.0, abs(e2))
