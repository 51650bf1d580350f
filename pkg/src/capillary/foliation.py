"""Spherical-cap barrier foliations of half-balls and the annulus probe.

In the flat half-space model the Fermi half-sphere of radius s about a wall
point p foliates downward through spherical caps S_{s,alpha} that share the
wall circle of radius s and meet the wall at angle alpha = alpha(gamma),

    pi/2 - alpha(gamma) = (1 + mu) * (pi/2 - gamma),

for gamma in [theta, pi/2].  Every such cap has constant mean curvature
2 sin(alpha) / s, which blows up as s -> 0; that makes the caps usable as
maximum-principle barriers against capillary surfaces with bounded H and
contact angle theta.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ambient import AmbientDomain, HALFSPACE
from .energy import EnergyParams
from .errors import BadMu, OutOfScale
from .mesh import CapillaryMesh


@dataclass(frozen=True)
class Barrier:
    s: float
    gamma: float
    mu: float
    alpha: float
    footpoint: np.ndarray       # wall point p
    center: np.ndarray          # sphere center of the cap (on the axis through p)
    cap_radius: float
    h_bound: float              # constant mean curvature 2/cap_radius

    def height(self, r: np.ndarray) -> np.ndarray:
        """Cap height above the wall at lateral distance r <= s from the axis."""
        r = np.asarray(r, dtype=float)
        return self.center[2] + np.sqrt(np.maximum(self.cap_radius**2 - r * r, 0.0))

    def signed_value(self, points) -> np.ndarray:
        """|x - center| - cap_radius: negative inside the cap sphere."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.norm(p - self.center, axis=1) - self.cap_radius


def alpha_of(gamma: float, mu: float) -> float:
    return np.pi / 2.0 - (1.0 + mu) * (np.pi / 2.0 - gamma)


def default_mu(theta: float) -> float:
    """Midpoint of the admissible interval (0, theta / (pi/2 - theta))."""
    if theta >= np.pi / 2:
        return 0.5
    return 0.5 * theta / (np.pi / 2.0 - theta)


def cap_barrier(s: float, gamma: float, mu: float, p, domain: AmbientDomain,
                theta: float | None = None) -> Barrier:
    """Barrier cap through the wall circle of radius s about p at angle alpha(gamma)."""
    if domain.kind != HALFSPACE:
        raise ValueError("barrier caps are defined in the half-space model")
    if s <= 0:
        raise ValueError("radius s must be positive")
    if not 0.0 < gamma <= np.pi / 2 + 1e-12:
        raise ValueError("gamma must lie in (0, pi/2]")
    if theta is not None:
        if gamma < theta - 1e-12:
            raise ValueError("gamma must lie in [theta, pi/2]")
        hi = theta / max(np.pi / 2.0 - theta, 1e-300) if theta < np.pi / 2 else np.inf
        if not 0.0 < mu < hi:
            raise BadMu(f"mu must lie in (0, {hi:g})")
    alpha = alpha_of(gamma, mu)
    if alpha <= 0:
        raise BadMu("mu too large: alpha(gamma) fell to zero")
    p = np.asarray(p, dtype=float)
    foot = np.array([p[0], p[1], 0.0])
    cap_radius = s / np.sin(alpha)
    center = foot + np.array([0.0, 0.0, -s / np.tan(alpha)])
    return Barrier(s=s, gamma=gamma, mu=mu, alpha=alpha, footpoint=foot,
                   center=center, cap_radius=cap_radius,
                   h_bound=2.0 / cap_radius)


@dataclass(frozen=True)
class BarrierReport:
    min_mean_curvature: float
    max_contact_angle: float
    foliation_ordered: bool


def barrier_report(barrier: Barrier, params: EnergyParams, gamma_grid: int = 17) -> BarrierReport:
    """Constant curvature of the cap, its wall angle, and nestedness in gamma."""
    gammas = np.linspace(params.theta, np.pi / 2.0, gamma_grid)
    rr = np.linspace(0.0, barrier.s * (1 - 1e-9), 64)
    heights = []
    ordered = True
    for g in gammas:
        b = cap_barrier(barrier.s, g, barrier.mu, barrier.footpoint,
                        AmbientDomain(HALFSPACE), theta=params.theta)
        heights.append(b.height(rr))
    for a, b in zip(heights, heights[1:]):
        if np.any(b < a - 1e-12):
            ordered = False
    return BarrierReport(min_mean_curvature=barrier.h_bound,
                         max_contact_angle=barrier.alpha,
                         foliation_ordered=ordered)


def scale_limit(theta: float, c: float, mu: float | None = None,
                safety: float = 0.1) -> float:
    """s* = largest s with barrier curvature h(s, theta) > c + safety."""
    mu = default_mu(theta) if mu is None else mu
    alpha = alpha_of(theta, mu)
    return 2.0 * np.sin(alpha) / (abs(c) + safety)


def clearance_radius(s2: float, theta: float, mu: float | None = None) -> float:
    """Largest s0 with the half-sphere of radius s0 disjoint from S_{s2, theta}."""
    mu = default_mu(theta) if mu is None else mu
    b = cap_barrier(s2, theta, mu, np.zeros(3), AmbientDomain(HALFSPACE), theta=theta)
    rr = np.linspace(0.0, s2 * (1 - 1e-12), 4096)
    zz = b.height(rr)
    return float(np.sqrt(rr**2 + zz**2).min()) * (1.0 - 1e-9)


class ProbeVerdict(Enum):
    MEETS_INTERIORLY = "MeetsInteriorly"
    TANGENT_ON_WALL_ONLY = "TangentOnWallOnly"
    VIOLATION = "Violation"


@dataclass
class ProbeReport:
    verdict: ProbeVerdict
    witnesses: list
    gamma_star: float | None = None


def _sphere_crossings(mesh: CapillaryMesh, p: np.ndarray, s2: float):
    """Points where mesh edges cross the half-sphere |x - p| = s2."""
    v = mesh.vertices
    e = mesh._directed_edges
    ra = np.linalg.norm(v[e[:, 0]] - p, axis=1) - s2
    rb = np.linalg.norm(v[e[:, 1]] - p, axis=1) - s2
    crossing = ra * rb < 0
    if not crossing.any():
        return np.zeros((0, 3)), np.zeros((0,), dtype=np.int64)
    t = ra[crossing] / (ra[crossing] - rb[crossing])
    pts = (1 - t)[:, None] * v[e[crossing, 0]] + t[:, None] * v[e[crossing, 1]]
    return pts, e[crossing, 0]


def annulus_probe(mesh: CapillaryMesh, p, s1: float, s2: float, params: EnergyParams,
                  mu: float | None = None, wall_band: float | None = None,
                  normal_tol: float = 0.05) -> ProbeReport:
    """Classify the mesh trace on the outer Fermi half-sphere about p.

    MeetsInteriorly when the trace reaches the interior of the half-space;
    TangentOnWallOnly when every trace point sits on the wall with surface
    normal parallel to the wall normal; otherwise Violation, reported with
    the sliding-barrier angle gamma* whose cap touches the mesh interiorly.
    """
    p = np.asarray(p, dtype=float)
    p[2] = 0.0
    mu = default_mu(params.theta) if mu is None else mu
    s_star = scale_limit(params.theta, params.c, mu)
    if s2 >= s_star:
        raise OutOfScale(f"s2 = {s2} is not below the barrier scale s* = {s_star:.4g}")
    if not 0 < s1 < s2:
        raise ValueError("need 0 < s1 < s2")
    band = wall_band if wall_band is not None else 0.75 * mesh.max_edge_length()
    pts, verts = _sphere_crossings(mesh, p, s2)
    if len(pts) == 0:
        return ProbeReport(ProbeVerdict.TANGENT_ON_WALL_ONLY, [])
    interior_pts = pts[pts[:, 2] > band]
    if len(interior_pts):
        return ProbeReport(ProbeVerdict.MEETS_INTERIORLY, interior_pts[:5].tolist())
    # every trace point is on the wall: tangent sheets have normals parallel
    # to the wall normal there
    vn = mesh.vertex_normals()
    tilts = []
    for q, vi in zip(pts, verts):
        nu = vn[vi]
        tilt = np.arccos(np.clip(abs(nu[2]), -1.0, 1.0))
        tilts.append(tilt)
    if max(tilts) <= normal_tol:
        return ProbeReport(ProbeVerdict.TANGENT_ON_WALL_ONLY, pts[:5].tolist())
    # violation: slide the barrier family to find the touching cap
    gamma_star = None
    witness = None
    lo, hi = params.theta, np.pi / 2.0
    for g in np.linspace(hi, lo, 181):
        b = cap_barrier(s2, g, mu, p, AmbientDomain(HALFSPACE), theta=params.theta)
        val = b.signed_value(mesh.vertices)
        inside = (val < 0) & (mesh.vertices[:, 2] > band)
        if inside.any():
            gamma_star = float(g)
            witness = mesh.vertices[np.flatnonzero(inside)[0]].tolist()
            break
    return ProbeReport(ProbeVerdict.VIOLATION,
                       [witness] if witness is not None else [], gamma_star)
