"""Capillary energy and its exact discrete first variation.

The energy of the region enclosed by a mesh is

    E = area(Sigma) + cos(theta) * wetted - c * volume,

and the gradient returned here is the exact derivative of that discrete
quantity (triangle areas, shoelace/solid-angle wetted areas, divergence
theorem volume) with respect to vertex positions, not a quadrature of the
smooth first-variation formula.  This guarantees descent directions and
finite-difference agreement to solver precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambient import AmbientDomain
from .errors import NonTangentVariation
from .mesh import (BALL, CapillaryMesh, SurfaceMeasures, _wall_contributions, measures,
                   scatter_rows)


@dataclass(frozen=True)
class EnergyParams:
    """Prescribed mean curvature c and contact angle theta (radians)."""

    c: float
    theta: float

    def __post_init__(self):
        if not 0.0 < self.theta < np.pi or np.sin(self.theta) <= 1e-6:
            raise ValueError("theta must lie in (0, pi) with sin(theta) > 1e-6")

    @property
    def cos_theta(self) -> float:
        return float(np.cos(self.theta))


def capillary_energy(mesh: CapillaryMesh, domain: AmbientDomain, params: EnergyParams,
                     m: SurfaceMeasures | None = None) -> float:
    if mesh.is_empty:
        return 0.0
    m = m or measures(mesh, domain)
    return m.area + params.cos_theta * m.wetted_area - params.c * m.volume


def energy_gradient(mesh: CapillaryMesh, domain: AmbientDomain, params: EnergyParams,
                    project_boundary: bool = True) -> np.ndarray:
    """Per-vertex energy gradient; wall entries projected to the wall tangent."""
    v = mesh.vertices
    t = mesh.triangles
    grad = np.zeros_like(v)
    if mesh.is_empty:
        return grad
    a, b, c3 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    # area term: grad_a |T| = 0.5 * n x (c - b), cyclic
    n = len(v)
    cr = np.cross(b - a, c3 - a)
    nrm = np.linalg.norm(cr, axis=1, keepdims=True)
    nhat = cr / np.maximum(nrm, 1e-300)
    coef = -params.c / 6.0
    grad += scatter_rows(t[:, 0], 0.5 * np.cross(nhat, c3 - b) + coef * np.cross(b, c3), n)
    grad += scatter_rows(t[:, 1], 0.5 * np.cross(nhat, a - c3) + coef * np.cross(c3, a), n)
    grad += scatter_rows(t[:, 2], 0.5 * np.cross(nhat, b - a) + coef * np.cross(a, b), n)

    # wetted-area terms (enter the energy and, on curved/offset walls, the volume)
    for loop, _kind, _value, g, sign, vol_factor in _wall_contributions(mesh, domain):
        w = (params.cos_theta - params.c * vol_factor) * sign
        np.add.at(grad, loop, w * g)

    if project_boundary and mesh.wall_vertices.any():
        idx = np.flatnonzero(mesh.wall_vertices)
        eb = domain.wall_normal(v[idx])
        grad[idx] -= np.einsum("ij,ij->i", grad[idx], eb)[:, None] * eb
    return grad


def first_variation(mesh: CapillaryMesh, domain: AmbientDomain, params: EnergyParams,
                    field: np.ndarray, tol: float = 1e-8) -> float:
    """Exact derivative of the discrete energy along vertex displacement ``field``.

    The field must be wall-tangent at wall vertices (admissible variations
    keep the contact line on the wall).
    """
    X = np.asarray(field, dtype=float).reshape(len(mesh.vertices), 3)
    if mesh.wall_vertices.any():
        idx = np.flatnonzero(mesh.wall_vertices)
        eb = domain.wall_normal(mesh.vertices[idx])
        viol = np.abs(np.einsum("ij,ij->i", X[idx], eb))
        if viol.max(initial=0.0) > tol:
            raise NonTangentVariation(
                f"boundary field has wall-normal component {viol.max():.3e} > {tol:g}")
    g = energy_gradient(mesh, domain, params, project_boundary=False)
    return float(np.einsum("ij,ij->", g, X))


def random_admissible_field(mesh: CapillaryMesh, domain: AmbientDomain,
                            rng: np.random.Generator, smooth: int = 2) -> np.ndarray:
    """Random smooth vertex field, wall-tangent at wall vertices, zero on rims."""
    X = rng.standard_normal(mesh.vertices.shape)
    adj = mesh.adjacency()
    for _ in range(smooth):
        Y = X.copy()
        for i, nb in enumerate(adj):
            if len(nb):
                Y[i] = 0.5 * X[i] + 0.5 * X[nb].mean(axis=0)
        X = Y
    if mesh.wall_vertices.any():
        idx = np.flatnonzero(mesh.wall_vertices)
        eb = domain.wall_normal(mesh.vertices[idx])
        X[idx] -= np.einsum("ij,ij->i", X[idx], eb)[:, None] * eb
    X[mesh.rim_vertices] = 0.0
    scale = np.abs(X).max()
    return X / max(scale, 1e-300)
