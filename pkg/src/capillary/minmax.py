"""Sweepouts, widths, pull-tight and the mountain-pass search.

The search is a string method on families of voxel regions from the empty set
to the full container: relaxed descent on each interior node, re-thresholding
to binary, flat-distance reparametrization to control fineness, and a
pull-tight pass that fixes near-stationary nodes.  The width history is
non-increasing by construction (steps are accept/reject).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ambient import AmbientDomain
from .energy import EnergyParams
from .errors import TrivialSweepout, WidthCollapse
from .mesh import CapillaryMesh
from .region import (VoxelRegion, flat_distance, make_region, region_energy,
                     relaxed_gradient)
from .solver import RelaxOptions, ResidualReport, relax, residuals


@dataclass
class Sweepout:
    nodes: list  # VoxelRegion, node 0 = empty, node m-1 = M

    @property
    def fineness(self) -> float:
        return max(
            abs(_interior_perimeter(self.nodes[j + 1]) - _interior_perimeter(self.nodes[j]))
            for j in range(len(self.nodes) - 1))

    def copy(self) -> "Sweepout":
        return Sweepout([r.copy() for r in self.nodes])


def _interior_perimeter(region: VoxelRegion) -> float:
    from . import _core
    from ._stencil import OFFSETS, WEIGHTS

    occ = np.ascontiguousarray(region.extended_occupancy(), dtype=np.float64)
    pmask = region.ghost_mask if region.ghost_mask is not None else region.mask
    return _core.pair_energy(occ, pmask, OFFSETS, WEIGHTS) * region.spacing**2


HEIGHT_FUNCTIONS = ("x3", "radial")


def sweep_from_morse(domain: AmbientDomain, height: str = "x3", m: int = 33,
                     grid: int = 64) -> Sweepout:
    """Sublevel-set sweepout of a Morse height function, m nodes, endpoints exact."""
    if m < 3:
        raise ValueError("a sweepout needs at least 3 nodes")
    base = make_region(domain, n=grid)
    centers = base.cell_centers()
    if height == "x3":
        phi = centers[..., 2]
    elif height == "radial":
        p0 = np.array([0.0, 0.0, -1.0]) if domain.kind == "ball" else np.zeros(3)
        phi = np.linalg.norm(centers - p0, axis=-1)
    else:
        raise ValueError(f"unknown height function {height!r} (use one of {HEIGHT_FUNCTIONS})")
    phi = phi - phi[base.mask == 1].min()
    phi = phi / max(phi[base.mask == 1].max(), 1e-300)
    nodes = []
    for k in range(m):
        t = k / (m - 1)
        r = base.copy()
        if k == 0:
            r.occupancy = np.zeros(base.shape)
        elif k == m - 1:
            r.occupancy = base.mask.astype(float)
        else:
            r.occupancy = ((phi < t) & (base.mask == 1)).astype(float)
        nodes.append(r)
    return Sweepout(nodes)


def width_of(sweep: Sweepout, domain: AmbientDomain, params: EnergyParams):
    """Max node energy along the sweep and its index."""
    energies = [region_energy(r, domain, params).energy for r in sweep.nodes]
    idx = int(np.argmax(energies))
    return float(energies[idx]), idx


def node_gradient_norm(region: VoxelRegion, domain: AmbientDomain,
                       params: EnergyParams) -> float:
    g = relaxed_gradient(region, domain, params)
    return float(np.abs(g).max()) / region.spacing**2


def _descend_node(region: VoxelRegion, domain: AmbientDomain, params: EnergyParams,
                  steps: int, step_scale: float = 0.4) -> VoxelRegion:
    """Projected relaxed descent followed by re-thresholding (binary out)."""
    x = region.copy()
    x.binary = False
    for _ in range(steps):
        g = relaxed_gradient(x, domain, params)
        gmax = np.abs(g).max()
        if gmax < 1e-300:
            break
        x.occupancy = x.occupancy - (step_scale / gmax) * g
        x.clamp()
    return x.thresholded()


def pull_tight(sweep: Sweepout, domain: AmbientDomain, params: EnergyParams,
               iters: int = 1, stationary_tol: float | None = None) -> Sweepout:
    """Bounded descent on non-stationary nodes; stationary nodes and endpoints fixed.

    Per-node energy never increases (steps are rejected otherwise); the
    near-stationary threshold defaults to 10 * h on the cell-normalized
    gradient norm.
    """
    out = sweep.copy()
    if not out.nodes:
        return out
    h = out.nodes[0].spacing
    tol = stationary_tol if stationary_tol is not None else 10.0 * h
    for _ in range(max(0, iters)):
        for j in range(1, len(out.nodes) - 1):
            node = out.nodes[j]
            if node_gradient_norm(node, domain, params) <= tol:
                continue
            e_old = region_energy(node, domain, params).energy
            cand = _descend_node(node, domain, params, steps=2)
            if region_energy(cand, domain, params).energy <= e_old + 1e-12:
                out.nodes[j] = cand
    return out


def _blend(a: VoxelRegion, b: VoxelRegion, lam: float) -> VoxelRegion:
    r = a.copy()
    r.occupancy = (1.0 - lam) * a.occupancy + lam * b.occupancy
    return r.thresholded()


def reparametrize(sweep: Sweepout) -> Sweepout:
    """Resample nodes at uniform cumulative flat-distance positions."""
    nodes = sweep.nodes
    m = len(nodes)
    d = np.array([flat_distance(nodes[j], nodes[j + 1]) for j in range(m - 1)])
    cum = np.concatenate([[0.0], np.cumsum(d)])
    total = cum[-1]
    if total <= 0:
        return sweep.copy()
    targets = np.linspace(0.0, total, m)
    out = [nodes[0].copy()]
    for k in range(1, m - 1):
        t = targets[k]
        j = int(np.searchsorted(cum, t, side="right") - 1)
        j = min(max(j, 0), m - 2)
        seg = max(cum[j + 1] - cum[j], 1e-300)
        lam = (t - cum[j]) / seg
        out.append(_blend(nodes[j], nodes[j + 1], lam))
    out.append(nodes[-1].copy())
    return Sweepout(out)


@dataclass
class MinMaxReport:
    width: float
    argmax_index: int
    critical_region: VoxelRegion
    extracted_mesh: CapillaryMesh | None
    residuals: ResidualReport | None
    history: list = field(default_factory=list)
    collapsed: bool = False


@dataclass
class MountainPassOptions:
    outer_iters: int = 60
    inner_steps: int = 3
    reparam: bool = True
    pull_tight_every: int = 5
    tol: float = 1e-4
    margin_frac: float = 0.02
    extract: bool = True
    relax_iters: int = 200


def trivial_level(domain: AmbientDomain, params: EnergyParams) -> float:
    """max(A(empty), A(M)) = max(0, cos(theta) |wall| - c vol(M))."""
    if not np.isfinite(domain.wall_area):
        return 0.0
    return max(0.0, params.cos_theta * domain.wall_area - params.c * domain.volume)


def mountain_pass(sweep: Sweepout, domain: AmbientDomain, params: EnergyParams,
                  opts: MountainPassOptions | None = None) -> MinMaxReport:
    """String-method search for the min-max critical region of the sweepout class."""
    opts = opts or MountainPassOptions()
    width, argmax = width_of(sweep, domain, params)
    floor = trivial_level(domain, params)
    margin = opts.margin_frac * max(width, 1e-12)
    if width <= floor + margin:
        raise TrivialSweepout(
            f"width {width} does not exceed the endpoint level {floor}")
    cur = sweep.copy()
    history = [(0, width, argmax)]
    best_width = width
    stall = 0
    for outer in range(1, opts.outer_iters + 1):
        cand = cur.copy()
        for j in range(1, len(cand.nodes) - 1):
            cand.nodes[j] = _descend_node(cand.nodes[j], domain, params,
                                          steps=opts.inner_steps)
        if opts.reparam:
            cand = reparametrize(cand)
        if opts.pull_tight_every and outer % opts.pull_tight_every == 0:
            cand = pull_tight(cand, domain, params, iters=1)
        w_new, a_new = width_of(cand, domain, params)
        if w_new <= best_width + 1e-12:
            cur = cand
            if w_new < best_width - opts.tol:
                stall = 0
            else:
                stall += 1
            best_width = min(best_width, w_new)
            history.append((outer, w_new, a_new))
        else:
            stall += 1
            history.append((outer, best_width, history[-1][2]))
        if best_width <= floor + margin:
            report = MinMaxReport(best_width, history[-1][2],
                                  cur.nodes[history[-1][2]], None, None,
                                  history, collapsed=True)
            raise WidthCollapse(
                f"width fell to the trivial level {floor} (homotopy class lost)")
        if stall >= 10:
            break
    width, argmax = width_of(cur, domain, params)
    crit = cur.nodes[argmax]
    mesh = None
    res = None
    if opts.extract:
        mesh = extract_interface(crit, domain)
        if mesh is not None and opts.relax_iters:
            rep = relax(mesh, domain, params,
                        RelaxOptions(max_iter=opts.relax_iters, min_angle_deg=0.05,
                                     volume_lock=params.c != 0))
            mesh = rep.final_mesh
            res = rep.residuals
        elif mesh is not None:
            res = residuals(mesh, domain, params)
    return MinMaxReport(width, argmax, crit, mesh, res, history)


# ---------------------------------------------------------------------------
# interface extraction (marching cubes + domain clipping)
# ---------------------------------------------------------------------------


def extract_interface(region: VoxelRegion, domain: AmbientDomain,
                      smooth_sigma: float = 1.0) -> CapillaryMesh | None:
    """Triangulate the 0.5 level set of the (ghost-extended) occupancy.

    The raw marching-cubes surface is clipped exactly against the wall and
    near-wall vertices are snapped onto it, so the result satisfies the
    boundary invariants of CapillaryMesh.
    """
    from scipy import ndimage
    from skimage import measure as skmeasure

    occ = region.extended_occupancy().astype(float)
    if smooth_sigma > 0:
        occ = ndimage.gaussian_filter(occ, smooth_sigma)
    pad = np.pad(occ, 1, mode="edge")
    try:
        verts, faces, _normals, _vals = skmeasure.marching_cubes(pad, 0.5)
    except (ValueError, RuntimeError):
        return None
    if len(faces) == 0:
        return None
    h = region.spacing
    world = region.origin + (verts - 1 + 0.5) * h
    world, faces = _clip_to_domain(world, faces, domain, snap=0.75 * h)
    if len(faces) == 0:
        return None
    world, faces = _weld(world, faces, tol=0.2 * h)
    world = domain_snap(world, domain, band=0.3 * h)
    mesh = CapillaryMesh(world, faces, domain=domain, wall_tol=1e-7, validate=False)
    mesh = _clean_extracted(mesh, domain, rounds=6)
    # orient the normals out of the region (toward lower occupancy)
    tri_cent = mesh.vertices[mesh.triangles].mean(axis=1)
    idx = np.clip(((tri_cent - region.origin) / h - 0.5).round().astype(int), 0,
                  np.array(region.shape) - 1)
    tn = mesh.triangle_normals()
    grad = np.stack(np.gradient(occ), axis=-1)
    gv = grad[idx[:, 0], idx[:, 1], idx[:, 2]]
    score = float(np.einsum("ij,ij->", tn, gv))
    if score > 0:  # normals point uphill (into the region): flip
        mesh = CapillaryMesh(mesh.vertices, mesh.triangles[:, ::-1], domain=domain,
                             wall_tol=1e-7, validate=False)
    return mesh


def domain_snap(verts: np.ndarray, domain: AmbientDomain, band: float) -> np.ndarray:
    """Snap vertices within ``band`` of the wall exactly onto it."""
    out = np.asarray(verts, dtype=float).copy()
    sd = domain.signed_distance(out)
    near = np.abs(sd) <= band
    if near.any():
        out[near] = domain.project_to_wall(out[near])
    return out


def _collapse_slivers(mesh: CapillaryMesh, domain: AmbientDomain,
                      min_angle_deg: float = 2.0, rounds: int = 8) -> CapillaryMesh:
    """Collapse the shortest edge of every near-degenerate triangle."""
    cur = mesh
    thresh = np.radians(min_angle_deg)
    for _ in range(rounds):
        v = cur.vertices
        t = cur.triangles
        p = v[t]
        angs = np.full(len(t), np.pi)
        for k in range(3):
            u1 = p[:, (k + 1) % 3] - p[:, k]
            u2 = p[:, (k + 2) % 3] - p[:, k]
            cosv = np.einsum("ij,ij->i", u1, u2) / np.maximum(
                np.linalg.norm(u1, axis=1) * np.linalg.norm(u2, axis=1), 1e-300)
            angs = np.minimum(angs, np.arccos(np.clip(cosv, -1, 1)))
        bad = np.flatnonzero(angs < thresh)
        if len(bad) == 0:
            break
        wall = cur.wall_vertices
        mapping = np.arange(len(v))
        newpos = v.copy()
        touched = np.zeros(len(v), dtype=bool)
        for ti in bad:
            tri = t[ti]
            if touched[tri].any():
                continue
            edges = [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
            lens = [np.linalg.norm(v[a] - v[b]) for a, b in edges]
            a, b = edges[int(np.argmin(lens))]
            a, b = int(a), int(b)
            if wall[b] and not wall[a]:
                a, b = b, a
            # merge b into a; keep wall vertices on the wall
            mapping[b] = a
            if wall[a] and wall[b]:
                newpos[a] = domain.project_to_wall(0.5 * (v[a] + v[b]))
            elif not wall[a] and not wall[b]:
                newpos[a] = 0.5 * (v[a] + v[b])
            touched[[a, b]] = True
        newtris = mapping[t]
        keep = ((newtris[:, 0] != newtris[:, 1]) & (newtris[:, 1] != newtris[:, 2])
                & (newtris[:, 2] != newtris[:, 0]))
        newtris = newtris[keep]
        used = np.unique(newtris)
        remap = -np.ones(len(v), dtype=np.int64)
        remap[used] = np.arange(len(used))
        try:
            cur = CapillaryMesh(newpos[used], remap[newtris], domain=domain,
                                wall_tol=1e-7, validate=False)
        except Exception:
            return cur
    return cur


def _clean_extracted(mesh: CapillaryMesh, domain: AmbientDomain,
                     rounds: int = 6) -> CapillaryMesh:
    """Sliver collapse, tangential smoothing and edge flips after marching cubes."""
    from .solver import _edge_flip_repair, _tangential_smooth

    cur = _collapse_slivers(mesh, domain)
    for _ in range(rounds):
        if cur.min_triangle_angle() > np.radians(12.0):
            break
        v = _tangential_smooth(cur, domain, weight=0.4)
        idx = np.flatnonzero(cur.wall_vertices)
        if len(idx):
            v[idx] = domain.project_to_wall(v[idx])
        cur = cur.replace_vertices(v)
        cur = _edge_flip_repair(cur)
        cur = _collapse_slivers(cur, domain, min_angle_deg=1.0, rounds=2)
    return cur


def _clip_to_domain(verts, faces, domain, snap):
    sd = domain.signed_distance(verts)
    sd = np.where(np.abs(sd) < snap, 0.0, sd)
    vlist = [v for v in verts]
    snapped = {i for i in range(len(verts)) if sd[i] == 0.0}
    for i in snapped:
        vlist[i] = domain.project_to_wall(verts[i])
    cache: dict[tuple[int, int], int] = {}

    def cut(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            t = sd[i] / (sd[i] - sd[j])
            p = (1 - t) * np.asarray(vlist[i]) + t * np.asarray(vlist[j])
            cache[key] = len(vlist)
            vlist.append(domain.project_to_wall(p))
        return cache[key]

    out = []
    for tri in faces:
        s = [sd[i] for i in tri]
        inside = [x >= 0 for x in s]
        n_in = sum(inside)
        if n_in == 3:
            out.append(list(tri))
            continue
        if n_in == 0:
            continue
        idx = list(tri)
        if n_in == 1:
            k = inside.index(True)
            a = idx[k]
            b, c = idx[(k + 1) % 3], idx[(k + 2) % 3]
            if s[(k + 1) % 3] == 0 or s[(k + 2) % 3] == 0:
                out.append(list(tri))
                continue
            out.append([a, cut(a, b), cut(c, a)])
        else:  # two inside
            k = inside.index(False)
            c = idx[k]
            a, b = idx[(k + 1) % 3], idx[(k + 2) % 3]
            if s[k] == 0:
                out.append(list(tri))
                continue
            pb = cut(b, c)
            pa = cut(c, a)
            out.append([a, b, pb])
            out.append([a, pb, pa])
    return np.array(vlist), np.array(out, dtype=np.int64) if out else np.zeros((0, 3), np.int64)


def _weld(verts, faces, tol):
    key = np.round(verts / max(tol, 1e-300)).astype(np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    new_faces = inv[faces]
    good = (new_faces[:, 0] != new_faces[:, 1]) & (new_faces[:, 1] != new_faces[:, 2]) \
        & (new_faces[:, 2] != new_faces[:, 0])
    return verts[first], new_faces[good]


# ---------------------------------------------------------------------------
# small-volume lower bound
# ---------------------------------------------------------------------------


def random_small_region(base: VoxelRegion, rng: np.random.Generator,
                        max_cells: int) -> VoxelRegion:
    """Random connected blob grown by lattice BFS inside the mask."""
    r = base.copy()
    r.occupancy = np.zeros(base.shape)
    inmask = np.argwhere(base.mask == 1)
    seed = tuple(inmask[rng.integers(len(inmask))])
    target = int(rng.integers(2, max_cells + 1))
    frontier = [seed]
    chosen = {seed}
    while frontier and len(chosen) < target:
        cell = frontier.pop(rng.integers(len(frontier)))
        for off in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            nb = (cell[0] + off[0], cell[1] + off[1], cell[2] + off[2])
            if any(x < 0 for x in nb) or any(x >= n for x, n in zip(nb, base.shape)):
                continue
            if base.mask[nb] and nb not in chosen and rng.random() < 0.7:
                chosen.add(nb)
                frontier.append(nb)
                if len(chosen) >= target:
                    break
    for c in chosen:
        r.occupancy[c] = 1.0
    return r


def small_volume_bound(domain: AmbientDomain, params: EnergyParams,
                       samples: int = 500, grid: int = 32, seed: int = 0,
                       v0_frac: float = 0.05):
    """Empirical constant in  A(Omega) > delta vol^{2/3}  for small regions."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    base = make_region(domain, n=grid)
    vol_m = float(base.mask.sum()) * base.spacing**3
    v0 = v0_frac * vol_m
    max_cells = max(2, int(v0 / base.spacing**3))
    ratios = []
    for _ in range(samples):
        r = random_small_region(base, rng, max_cells)
        vol = r.volume
        if vol <= 0 or vol >= v0:
            continue
        e = region_energy(r, domain, params).energy
        ratios.append(e / vol ** (2.0 / 3.0))
    delta_emp = float(min(ratios)) * (1.0 - 1e-9) if ratios else 0.0
    return delta_emp, v0
