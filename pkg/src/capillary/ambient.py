"""Flat container geometries and wall differential data.

Three ambient domains are supported: the half-space {x3 >= 0} with the plane
x3 = 0 as wall, the closed unit ball with the unit sphere as wall, and the
slab {0 <= x3 <= h} with two plane walls.  Every other module obtains the
outward wall normal, the wall second fundamental form and nearest-point
projections from here.

Sign conventions (used consistently everywhere):
  * eta_bar points OUT of the domain M.
  * II(X, Y) = <d_X eta_bar, Y>, so the unit ball wall has II = +identity and
    wall mean curvature +2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousProjection

HALFSPACE = "halfspace"
BALL = "ball"
SLAB = "slab"

_KINDS = (HALFSPACE, BALL, SLAB)


@dataclass(frozen=True)
class AmbientDomain:
    """A flat container M in R^3, identified by kind and (for slabs) height."""

    kind: str
    slab_height: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}, expected one of {_KINDS}")
        if self.kind == SLAB and self.slab_height <= 0:
            raise ValueError("slab height must be positive")

    def signed_distance(self, points) -> np.ndarray:
        """Distance to the wall, positive inside M, zero exactly on the wall."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == HALFSPACE:
            d = p[:, 2]
        elif self.kind == BALL:
            d = 1.0 - np.linalg.norm(p, axis=1)
        else:
            d = np.minimum(p[:, 2], self.slab_height - p[:, 2])
        return d if np.ndim(points) > 1 else d[0]

    def contains(self, points) -> np.ndarray:
        return self.signed_distance(points) >= 0.0

    def wall_normal(self, points) -> np.ndarray:
        """Outward unit normal eta_bar of the nearest wall point(s)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == HALFSPACE:
            n = np.tile([0.0, 0.0, -1.0], (len(p), 1))
        elif self.kind == BALL:
            r = np.linalg.norm(p, axis=1, keepdims=True)
            with np.errstate(invalid="ignore", divide="ignore"):
                n = np.where(r > 0, p / r, np.nan)
        else:
            lower = p[:, 2] <= self.slab_height - p[:, 2]
            n = np.where(lower[:, None], [0.0, 0.0, -1.0], [0.0, 0.0, 1.0])
        return n if np.ndim(points) > 1 else n[0]

    def project_to_wall(self, points) -> np.ndarray:
        """Nearest wall point(s); vectorized, no ambiguity checks."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == HALFSPACE:
            q = p.copy()
            q[:, 2] = 0.0
        elif self.kind == BALL:
            r = np.linalg.norm(p, axis=1, keepdims=True)
            q = p / r
        else:
            q = p.copy()
            lower = p[:, 2] <= self.slab_height - p[:, 2]
            q[:, 2] = np.where(lower, 0.0, self.slab_height)
        return q if np.ndim(points) > 1 else q[0]

    @property
    def wall_area(self) -> float:
        """Total wall area; infinite for half-space and slab walls."""
        return 4.0 * np.pi if self.kind == BALL else np.inf

    @property
    def volume(self) -> float:
        return 4.0 * np.pi / 3.0 if self.kind == BALL else np.inf

    @property
    def diameter(self) -> float:
        """A bounded reference scale (unit for the unbounded domains)."""
        if self.kind == BALL:
            return 2.0
        if self.kind == SLAB:
            return self.slab_height
        return 1.0


@dataclass(frozen=True)
class BoundaryFrame:
    """Orthonormal wall frame and curvature data at a footpoint."""

    footpoint: np.ndarray
    eta_bar: np.ndarray
    tangent_basis: np.ndarray  # (2, 3), orthonormal, orthogonal to eta_bar
    second_fundamental: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    wall_mean_curvature: float = 0.0

    def second_fundamental_along(self, v) -> float:
        """II(v, v) for a wall-tangent vector v (not necessarily unit)."""
        c = self.tangent_basis @ np.asarray(v, dtype=float)
        return float(c @ self.second_fundamental @ c)


def _tangent_pair(n: np.ndarray) -> np.ndarray:
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(n, a)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return np.vstack([t1, t2])


def project_and_frame(domain: AmbientDomain, point, max_distance: float = 0.5) -> BoundaryFrame:
    """Nearest wall point of ``point`` together with the full wall frame.

    Raises AmbiguousProjection when the nearest point is not unique (ball
    center, slab midplane) and ValueError when the point is farther than
    ``max_distance`` from the wall.
    """
    p = np.asarray(point, dtype=float)
    if abs(domain.signed_distance(p)) > max_distance:
        raise ValueError("point too far from the wall for a reliable projection")

    if domain.kind == HALFSPACE:
        foot = np.array([p[0], p[1], 0.0])
        eta = np.array([0.0, 0.0, -1.0])
        return BoundaryFrame(foot, eta, _tangent_pair(eta))

    if domain.kind == BALL:
        r = np.linalg.norm(p)
        if r < 1e-12:
            raise AmbiguousProjection("ball center is equidistant from the whole wall")
        foot = p / r
        eta = foot.copy()
        return BoundaryFrame(foot, eta, _tangent_pair(eta), np.eye(2), 2.0)

    h = domain.slab_height
    lo, hi = p[2], h - p[2]
    if abs(lo - hi) < 1e-12:
        raise AmbiguousProjection("slab midplane point is equidistant from both walls")
    if lo < hi:
        foot = np.array([p[0], p[1], 0.0])
        eta = np.array([0.0, 0.0, -1.0])
    else:
        foot = np.array([p[0], p[1], h])
        eta = np.array([0.0, 0.0, 1.0])
    return BoundaryFrame(foot, eta, _tangent_pair(eta))


def domain_from_config(name: str, slab_height: float = 1.0) -> AmbientDomain:
    """Domain named in config files: halfspace | ball | slab."""
    return AmbientDomain(name.strip().lower(), slab_height=slab_height)
