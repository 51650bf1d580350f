import numpy as np
import pytest

from capillary import AmbientDomain, make_spherical_cap


@pytest.fixture(scope="session")
def halfspace():
    return AmbientDomain("halfspace")


@pytest.fixture(scope="session")
def ball():
    return AmbientDomain("ball")


@pytest.fixture(scope="session")
def slab():
    return AmbientDomain("slab", slab_height=1.0)


def smooth_noise(mesh, seed=1, amp=0.05, rounds=3):
    """Graph-smoothed random field normalized to max amplitude ``amp``."""
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(len(mesh.vertices))
    adj = mesh.adjacency()
    for _ in range(rounds):
        xi = np.array([0.5 * xi[i] + 0.5 * xi[nb].mean() if len(nb) else xi[i]
                       for i, nb in enumerate(adj)])
    return xi * (amp / np.abs(xi).max())


def perturbed_cap(domain, theta, level, seed=1, amp=0.05, radius=1.0):
    """Spherical cap with smooth radial noise of relative amplitude ``amp``."""
    m = make_spherical_cap(domain, theta, radius, level=level)
    xi = smooth_noise(m, seed=seed, amp=amp)
    center = np.array([0.0, 0.0, radius * np.cos(theta)])
    v = center + (m.vertices - center) * (1.0 + xi)[:, None]
    v[m.wall_vertices] = domain.project_to_wall(v[m.wall_vertices])
    return m.replace_vertices(v)


def deep_interior_mask(mesh):
    """Interior vertices whose whole 1-ring is interior."""
    adj = mesh.adjacency()
    bset = set(np.flatnonzero(mesh.boundary_vertices).tolist())
    return np.array([(not mesh.boundary_vertices[i])
                     and all(j not in bset for j in adj[i])
                     for i in range(len(mesh.vertices))])
