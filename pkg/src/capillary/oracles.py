"""Closed-form references and brute-force baselines used by the tests.

Nothing in the main pipeline depends on this module; it exists so that the
test suite can compare against independent answers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import TooLarge


@dataclass(frozen=True)
class CapOracle:
    """Closed forms for the spherical cap solving H = c, <nu, eta_bar> = cos(theta).

    The cap of sphere radius R sits on the half-space wall with its sphere
    center at height R*cos(theta); the boundary circle has radius R*sin(theta).
    With the energy  area + cos(theta)*wetted - c*vol  this family is
    stationary in R exactly at c = 2/R, for every theta.
    """

    theta: float
    radius: float

    @property
    def area(self) -> float:
        return 2.0 * np.pi * self.radius**2 * (1.0 + np.cos(self.theta))

    @property
    def wetted(self) -> float:
        return np.pi * self.radius**2 * np.sin(self.theta) ** 2

    @property
    def volume(self) -> float:
        u = np.cos(self.theta)
        return np.pi / 3.0 * self.radius**3 * (1.0 + u) ** 2 * (2.0 - u)

    @property
    def mean_curvature(self) -> float:
        return 2.0 / self.radius

    @property
    def center_height(self) -> float:
        return self.radius * np.cos(self.theta)

    @property
    def contact_radius(self) -> float:
        return self.radius * np.sin(self.theta)

    def energy_at(self, c: float) -> float:
        return self.area + np.cos(self.theta) * self.wetted - c * self.volume


def cap_energy(theta: float, radius: float, c: float) -> float:
    """Closed-form capillary energy of the critical cap."""
    if not 0.0 < theta < np.pi:
        raise ValueError("theta must lie in (0, pi)")
    if radius <= 0:
        raise ValueError("radius must be positive")
    return CapOracle(theta, radius).energy_at(c)


def brute_force_replacement(region, domain, params, cells, delta, max_batch=None):
    """Exhaustive optimum of the constrained replacement problem.

    Explores every occupancy pattern on the cell subset ``cells`` reachable
    from ``region`` through moves that flip at most floor(delta/h^3) cells at
    a time while every intermediate state keeps energy <= E(start) + delta.
    Returns (best_energy, best_region, path) where path is the list of states
    (as frozensets of flipped cells) along an optimal admissible route.
    """
    from .region import region_energy

    cells = [tuple(int(x) for x in c) for c in cells]
    if len(cells) > 12:
        raise TooLarge("brute-force replacement supports at most 12 free cells")
    h3 = region.spacing**3
    if delta < h3 - 1e-15:
        from .errors import InfeasibleConstraint

        raise InfeasibleConstraint("delta below one cell move")
    m_max = max_batch if max_batch is not None else max(1, int(np.floor(delta / h3 + 1e-12)))
    m_max = min(m_max, len(cells))

    base = region.copy()
    e0 = region_energy(base, domain, params).energy
    cap = e0 + delta + 1e-12

    def state_energy(state: frozenset) -> float:
        r = base.copy()
        for idx in state:
            c = cells[idx]
            r.occupancy[c] = 1.0 - r.occupancy[c]
        return region_energy(r, domain, params).energy

    start = frozenset()
    energies = {start: e0}
    parents = {start: None}
    frontier = [start]
    n = len(cells)
    while frontier:
        nxt = []
        for state in frontier:
            for k in range(1, m_max + 1):
                for combo in itertools.combinations(range(n), k):
                    new = state.symmetric_difference(combo)
                    if new in energies:
                        continue
                    e = state_energy(new)
                    if e > cap:
                        continue
                    energies[new] = e
                    parents[new] = state
                    nxt.append(new)
        frontier = nxt

    best = min(energies, key=lambda s: (energies[s], len(s), tuple(sorted(s))))
    path = []
    s = best
    while s is not None:
        path.append(s)
        s = parents[s]
    path.reverse()

    best_region = base.copy()
    for idx in best:
        c = cells[idx]
        best_region.occupancy[c] = 1.0 - best_region.occupancy[c]
    return energies[best], best_region, path
