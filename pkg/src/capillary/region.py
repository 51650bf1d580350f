"""Discrete Caccioppoli sets on a voxel grid.

A VoxelRegion stores per-cell occupancy (binary {0,1} or relaxed [0,1]) on a
regular grid clipped by the domain mask (cell centers inside M).  The
weighted perimeter splits into an interior part (multi-orientation Crofton
stencil, see _stencil) and a wall part (precomputed analytic wall-patch areas
per boundary cell), matching the capillary boundary measure
interior + cos(theta) * wall.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _core
from ._stencil import OFFSETS, WEIGHTS
from .ambient import AmbientDomain, BALL, HALFSPACE, SLAB
from .energy import EnergyParams
from .errors import GridMismatch, InfeasibleConstraint

# Collar width for the ghost continuation across the wall: 1 cell balances the
# clipped in-mask pairs against the continued-interface overshoot (calibrated
# on wall-meeting disks: errors under 1% vs -4%/+3% for collar 0/2).
GHOST_COLLAR = 1


@dataclass
class VoxelRegion:
    shape: tuple[int, int, int]
    origin: np.ndarray
    spacing: float
    occupancy: np.ndarray          # float64 (nx, ny, nz)
    mask: np.ndarray               # uint8
    wall_patch: np.ndarray         # float64, wall area carried by each cell
    binary: bool = True
    # ghost continuation of the occupancy across the wall (collar cells copy
    # their nearest in-mask cell), so the interface estimator is not clipped
    # at the contact line
    ghost_mask: np.ndarray | None = None    # uint8: mask plus collar
    ghost_source: np.ndarray | None = None  # flat indices into occupancy

    def copy(self) -> "VoxelRegion":
        return VoxelRegion(self.shape, self.origin.copy(), self.spacing,
                           self.occupancy.copy(), self.mask, self.wall_patch,
                           self.binary, self.ghost_mask, self.ghost_source)

    def extended_occupancy(self) -> np.ndarray:
        if self.ghost_source is None:
            return self.occupancy
        return self.occupancy.ravel()[self.ghost_source].reshape(self.shape)

    def same_grid(self, other: "VoxelRegion") -> bool:
        return (self.shape == other.shape and self.spacing == other.spacing
                and np.allclose(self.origin, other.origin))

    def cell_centers(self) -> np.ndarray:
        nx, ny, nz = self.shape
        ax = [self.origin[k] + (np.arange(n) + 0.5) * self.spacing
              for k, n in enumerate((nx, ny, nz))]
        X, Y, Z = np.meshgrid(*ax, indexing="ij")
        return np.stack([X, Y, Z], axis=-1)

    def clamp(self) -> None:
        np.clip(self.occupancy, 0.0, 1.0, out=self.occupancy)
        self.occupancy[self.mask == 0] = 0.0

    def thresholded(self, level: float = 0.5) -> "VoxelRegion":
        r = self.copy()
        r.occupancy = (self.occupancy >= level).astype(float)
        r.occupancy[self.mask == 0] = 0.0
        r.binary = True
        return r

    @property
    def volume(self) -> float:
        return float(self.occupancy[self.mask == 1].sum()) * self.spacing**3


@dataclass(frozen=True)
class PerimeterSplit:
    interior_perimeter: float
    wall_area: float


@dataclass(frozen=True)
class RegionEnergy:
    energy: float
    split: PerimeterSplit
    volume: float


def _wall_patches(domain: AmbientDomain, shape, origin, spacing, samples: int = 600000,
                  mask: np.ndarray | None = None):
    """Analytic wall area attributed to each grid cell.

    Plane walls get exact h^2 facets on the adjacent cell layer; the sphere
    wall is distributed by deterministic Fibonacci sampling with each sample
    walked inward until it lands in a mask cell, so the patches sum to the
    exact wall area.
    """
    nx, ny, nz = shape
    patch = np.zeros(shape)
    h = spacing

    if domain.kind in (HALFSPACE, SLAB):
        z0_layer = int(np.floor((0.0 - origin[2]) / h + 1e-9))
        if 0 <= z0_layer < nz:
            patch[:, :, z0_layer] += h * h
        if domain.kind == SLAB:
            z1_layer = int(np.ceil((domain.slab_height - origin[2]) / h - 1e-9)) - 1
            if 0 <= z1_layer < nz and z1_layer != z0_layer:
                patch[:, :, z1_layer] += h * h
    elif domain.kind == BALL:
        i = np.arange(samples) + 0.5
        z = 1.0 - 2.0 * i / samples
        ga = np.pi * (1 + 5**0.5) * i
        s = np.sqrt(np.maximum(1 - z * z, 0.0))
        pts = np.stack([s * np.cos(ga), s * np.sin(ga), z], axis=1)
        w = 4.0 * np.pi / samples
        remaining = np.ones(len(pts), dtype=bool)
        for shrink in (0.25, 0.75, 1.25, 2.0, 3.0):
            inner = pts[remaining] * (1.0 - shrink * h)
            idx = np.floor((inner - origin) / h).astype(int)
            ok = np.all((idx >= 0) & (idx < np.array(shape)), axis=1)
            if mask is not None:
                inm = np.zeros(len(idx), dtype=bool)
                inm[ok] = mask[idx[ok, 0], idx[ok, 1], idx[ok, 2]] == 1
            else:
                inm = ok
            rows = np.flatnonzero(remaining)
            good = rows[inm]
            gi = idx[inm]
            np.add.at(patch, (gi[:, 0], gi[:, 1], gi[:, 2]), w)
            remaining[good] = False
            if not remaining.any():
                break
    return patch


def make_region(domain: AmbientDomain, n: int = 32, extent: float | None = None,
                origin=None, occupancy: np.ndarray | None = None) -> VoxelRegion:
    """Grid covering the domain: the unit ball, a slab box, or a half-space box."""
    if domain.kind == BALL:
        extent = extent or 2.0
        origin = np.array([-1.0, -1.0, -1.0]) if origin is None else np.asarray(origin, float)
        h = extent / n
        shape = (n, n, n)
    elif domain.kind == SLAB:
        extent = extent or 1.0
        h = domain.slab_height / n
        nxy = int(round(extent / h))
        origin = np.array([-extent / 2, -extent / 2, 0.0]) if origin is None \
            else np.asarray(origin, float)
        shape = (nxy, nxy, n)
    else:
        extent = extent or 1.0
        h = extent / n
        origin = np.array([-extent / 2, -extent / 2, 0.0]) if origin is None \
            else np.asarray(origin, float)
        shape = (n, n, n)
    region = VoxelRegion(shape, origin, h, np.zeros(shape), None, None)
    centers = region.cell_centers().reshape(-1, 3)
    mask = domain.contains(centers).reshape(shape).astype(np.uint8)
    region.mask = np.ascontiguousarray(mask)
    region.wall_patch = _wall_patches(domain, shape, origin, h, mask=mask)
    region.wall_patch[mask == 0] = 0.0
    region.ghost_mask, region.ghost_source = _ghost_extension(mask, collar=GHOST_COLLAR)
    if occupancy is not None:
        region.occupancy = np.ascontiguousarray(occupancy, dtype=float)
        region.clamp()
    return region


def _ghost_extension(mask: np.ndarray, collar: int = 2):
    """Mask plus a collar of outside cells, each mapped to its nearest in-mask cell."""
    from scipy import ndimage

    dist, (ix, iy, iz) = ndimage.distance_transform_edt(mask == 0, return_indices=True)
    gm = (dist <= collar + 1e-9).astype(np.uint8)
    flat = (ix * mask.shape[1] + iy) * mask.shape[2] + iz
    return np.ascontiguousarray(gm), np.ascontiguousarray(flat.ravel())


def region_energy(region: VoxelRegion, domain: AmbientDomain,
                  params: EnergyParams) -> RegionEnergy:
    occ = np.ascontiguousarray(region.extended_occupancy(), dtype=np.float64)
    pmask = region.ghost_mask if region.ghost_mask is not None else region.mask
    interior = _core.pair_energy(occ, pmask, OFFSETS, WEIGHTS) * region.spacing**2
    wall = float((region.occupancy * region.wall_patch).sum())
    vol = float(region.occupancy[region.mask == 1].sum()) * region.spacing**3
    e = interior + params.cos_theta * wall - params.c * vol
    return RegionEnergy(e, PerimeterSplit(interior, wall), vol)


def relaxed_gradient(region: VoxelRegion, domain: AmbientDomain, params: EnergyParams,
                     eps: float = 1e-3) -> np.ndarray:
    """Gradient of the smoothed relaxed energy w.r.t. occupancy values."""
    occ = np.ascontiguousarray(region.extended_occupancy(), dtype=np.float64)
    pmask = region.ghost_mask if region.ghost_mask is not None else region.mask
    out = np.zeros_like(occ)
    _core.tv_gradient(occ, pmask, OFFSETS, WEIGHTS, eps, out)
    if region.ghost_source is not None:
        out = np.bincount(region.ghost_source, weights=out.ravel(),
                          minlength=occ.size).reshape(region.shape)
    out *= region.spacing**2
    out += params.cos_theta * region.wall_patch
    out -= params.c * region.spacing**3
    out[region.mask == 0] = 0.0
    return out


def flat_distance(r1: VoxelRegion, r2: VoxelRegion) -> float:
    """Symmetric-difference volume h^3 sum|occ1 - occ2| (flat norm surrogate)."""
    if not r1.same_grid(r2):
        raise GridMismatch("regions live on different grids")
    return float(np.abs(r1.occupancy - r2.occupancy).sum()) * r1.spacing**3


def flip_energy_delta(region: VoxelRegion, domain: AmbientDomain, params: EnergyParams,
                      cell) -> float:
    """Energy change if the binary cell flips (exact, local-box evaluation)."""
    i, j, k = (int(x) for x in cell)
    s = 1.0 - 2.0 * region.occupancy[i, j, k]
    if region.ghost_source is None:
        d_int = _core.flip_delta(region.occupancy, region.mask, OFFSETS, WEIGHTS,
                                 i, j, k) * region.spacing**2
    else:
        # the flip also updates the ghost copies of this cell, so difference a
        # local box large enough to contain every affected pair
        r = 6
        sl = tuple(slice(max(0, c - r), min(n, c + r + 1))
                   for c, n in zip((i, j, k), region.shape))
        pm = np.ascontiguousarray(region.ghost_mask[sl])
        src_box = region.ghost_source.reshape(region.shape)[sl]
        flat = region.occupancy.ravel()
        occ0 = np.ascontiguousarray(flat[src_box].astype(np.float64))
        before = _core.pair_energy(occ0, pm, OFFSETS, WEIGHTS)
        me = (i * region.shape[1] + j) * region.shape[2] + k
        occ1 = occ0.copy()
        occ1[src_box == me] = 1.0 - flat[me]
        after = _core.pair_energy(np.ascontiguousarray(occ1), pm, OFFSETS, WEIGHTS)
        d_int = (after - before) * region.spacing**2
    d_wall = params.cos_theta * region.wall_patch[i, j, k] * s
    d_vol = -params.c * region.spacing**3 * s
    return float(d_int + d_wall + d_vol)


@dataclass
class ReplaceResult:
    region: VoxelRegion
    trajectory: list            # list of state snapshots as flip tuples
    energies: list


def replace(region: VoxelRegion, domain: AmbientDomain, params: EnergyParams,
            cells, delta: float, budget: int = 20000, seed: int = 0,
            eps: float | None = None) -> ReplaceResult:
    """Constrained local minimization over single-cell flips inside ``cells``.

    Every intermediate state differs from its predecessor by one cell (flat
    distance h^3 <= delta) and keeps energy <= E(start) + delta; the returned
    region is the best state found.  Annealing with geometric cooling followed
    by greedy descent; the trajectory certifies constraints (a)-(c).
    """
    h3 = region.spacing**3
    if delta < h3 - 1e-15:
        raise InfeasibleConstraint(f"delta {delta} below one cell move {h3}")
    cells = [tuple(int(x) for x in c) for c in cells
             if region.mask[tuple(int(x) for x in c)]]
    base = region.thresholded() if not region.binary else region.copy()
    e0 = region_energy(base, domain, params).energy
    cap = e0 + delta + 1e-12
    rng = np.random.default_rng(seed)

    cur = base.copy()
    e_cur = e0
    best_state: frozenset = frozenset()
    e_best = e0
    state: set[tuple] = set()
    traj = [frozenset()]
    energies = [e0]

    if cells:
        n_anneal = min(budget, 60 * len(cells) * max(1, int(np.log2(len(cells) + 1))))
        temp0 = max(abs(delta), 1e-6)
        for step_i in range(n_anneal):
            cell = cells[rng.integers(len(cells))]
            dE = flip_energy_delta(cur, domain, params, cell)
            e_new = e_cur + dE
            if e_new > cap:
                continue
            temp = temp0 * (0.02 / 1.0) ** (step_i / max(n_anneal - 1, 1))
            if dE <= 0 or rng.random() < np.exp(-dE / max(temp, 1e-12)):
                cur.occupancy[cell] = 1.0 - cur.occupancy[cell]
                state.symmetric_difference_update({cell})
                e_cur = e_new
                traj.append(frozenset(state))
                energies.append(e_cur)
                if e_cur < e_best - 1e-12:
                    e_best = e_cur
                    best_state = frozenset(state)

        # rewind to the best visited state along an admissible path: replay the
        # trajectory prefix that first reaches it
        first = traj.index(best_state)
        traj = traj[: first + 1]
        energies = energies[: first + 1]
        cur = base.copy()
        for c in best_state:
            cur.occupancy[c] = 1.0 - cur.occupancy[c]
        e_cur = e_best

        # greedy polish: strictly improving single flips
        improved = True
        while improved:
            improved = False
            for cell in cells:
                dE = flip_energy_delta(cur, domain, params, cell)
                if dE < -1e-12 and e_cur + dE <= cap:
                    cur.occupancy[cell] = 1.0 - cur.occupancy[cell]
                    state = set(traj[-1].symmetric_difference({cell}))
                    e_cur += dE
                    traj.append(frozenset(state))
                    energies.append(e_cur)
                    improved = True
    return ReplaceResult(cur, traj, energies)


def replay_trajectory(region: VoxelRegion, domain: AmbientDomain, params: EnergyParams,
                      trajectory, cells, delta: float):
    """Re-check constraints (a)-(c) on a recorded flip trajectory.

    Returns (ok, info): support inside cells, per-step flat distance <= delta,
    every intermediate energy <= E(start) + delta.
    """
    h3 = region.spacing**3
    allowed = {tuple(int(x) for x in c) for c in cells}
    base = region.copy()
    e0 = region_energy(base, domain, params).energy
    prev = frozenset()
    for state in trajectory:
        if not set(state) <= allowed:
            return False, "support outside K"
        moved = len(state.symmetric_difference(prev))
        if moved * h3 > delta + 1e-12:
            return False, f"step flat distance {moved * h3} > delta"
        r = base.copy()
        for c in state:
            r.occupancy[c] = 1.0 - r.occupancy[c]
        e = region_energy(r, domain, params).energy
        if e > e0 + delta + 1e-9:
            return False, f"intermediate energy {e} above E0 + delta"
        prev = state
    return True, "ok"


# ---------------------------------------------------------------------------
# CAPREG I/O
# ---------------------------------------------------------------------------


def write_capreg(region: VoxelRegion, path) -> None:
    with open(path, "wb") as fh:
        nx, ny, nz = region.shape
        ox, oy, oz = region.origin
        header = (f"CAPREG v1\n{nx} {ny} {nz}\n"
                  f"origin {ox:.17g} {oy:.17g} {oz:.17g}\n"
                  f"spacing {region.spacing:.17g}\n")
        fh.write(header.encode())
        occ = (region.occupancy >= 0.5).astype(np.uint8)
        fh.write(np.ascontiguousarray(occ).tobytes(order="C"))


def read_capreg(path, domain: AmbientDomain) -> VoxelRegion:
    with open(path, "rb") as fh:
        magic = fh.readline().decode().strip()
        if magic != "CAPREG v1":
            raise ValueError("not a CAPREG v1 file")
        nx, ny, nz = (int(x) for x in fh.readline().split())
        otoks = fh.readline().split()
        origin = np.array([float(x) for x in otoks[1:4]])
        spacing = float(fh.readline().split()[1])
        raw = fh.read(nx * ny * nz)
    occ = np.frombuffer(raw, dtype=np.uint8).reshape(nx, ny, nz).astype(float)
    region = make_region(domain, n=nz, origin=origin)
    if region.shape != (nx, ny, nz) or not np.isclose(region.spacing, spacing):
        # rebuild with explicit geometry when the defaults do not match
        region = VoxelRegion((nx, ny, nz), origin, spacing, np.zeros((nx, ny, nz)),
                             None, None)
        centers = region.cell_centers().reshape(-1, 3)
        region.mask = np.ascontiguousarray(
            domain.contains(centers).reshape(region.shape).astype(np.uint8))
        region.wall_patch = _wall_patches(domain, region.shape, origin, spacing)
        region.wall_patch[region.mask == 0] = 0.0
    region.occupancy = occ
    region.clamp()
    return region
