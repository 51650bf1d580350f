"""Triangulated capillary surfaces with wall-constrained boundary.

A CapillaryMesh is an oriented triangle mesh whose boundary vertices lie on
the wall of an ambient domain.  The triangle orientation encodes the outward
normal nu of the enclosed region, with the convention that a sphere enclosing
its region has mean curvature +2/R.  Fixture meshes may additionally carry a
"rim": boundary vertices away from the wall (truncation edges of analytic
bands); those are flagged and excluded from contact-angle data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambient import AmbientDomain, BALL, HALFSPACE, SLAB, project_and_frame
from .errors import DegenerateStar, NonClosedBoundary

WALL_TOL = 1e-9


def scatter_rows(idx: np.ndarray, vals: np.ndarray, n: int) -> np.ndarray:
    """Row-wise scatter-add via bincount (much faster than np.add.at)."""
    out = np.empty((n, vals.shape[1]))
    for k in range(vals.shape[1]):
        out[:, k] = np.bincount(idx, weights=vals[:, k], minlength=n)
    return out


# ---------------------------------------------------------------------------
# mesh container and topology
# ---------------------------------------------------------------------------


class CapillaryMesh:
    """Oriented triangle mesh; boundary vertices constrained to the wall."""

    def __init__(self, vertices, triangles, domain: AmbientDomain | None = None,
                 allow_rim: bool = False, wall_tol: float = WALL_TOL, validate: bool = True):
        self.vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        self.domain = domain
        self.allow_rim = allow_rim
        self.wall_tol = wall_tol
        self._build_topology(validate=validate)
        self._classify_boundary()

    # -- topology -----------------------------------------------------------

    def _build_topology(self, validate: bool):
        tris = self.triangles
        n = len(self.vertices)
        if tris.size and (tris.min() < 0 or tris.max() >= n):
            raise ValueError("triangle index out of range")
        directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]], axis=0)
        self._directed_edges = directed
        key = directed[:, 0] * n + directed[:, 1]
        rev = directed[:, 1] * n + directed[:, 0]
        if validate and len(key) != len(np.unique(key)):
            raise ValueError("inconsistent orientation: repeated directed edge")
        has_rev = np.isin(key, rev)
        self._boundary_directed = directed[~has_rev]
        self.boundary_loops = self._trace_loops(self._boundary_directed, strict=validate)
        self.boundary_vertices = np.zeros(n, dtype=bool)
        if len(self._boundary_directed):
            self.boundary_vertices[self._boundary_directed.ravel()] = True

    @staticmethod
    def _trace_loops(bedges: np.ndarray, strict: bool = True) -> list[np.ndarray]:
        """Decompose directed boundary edges into cycles.

        Strict mode requires a manifold boundary (one outgoing edge per
        vertex); the tolerant mode (extracted meshes) greedily follows any
        unused outgoing edge, which still yields an edge-disjoint cycle cover.
        """
        if len(bedges) == 0:
            return []
        succ: dict[int, list[int]] = {}
        for a, b in bedges:
            if strict and int(a) in succ:
                raise NonClosedBoundary("non-manifold boundary vertex")
            succ.setdefault(int(a), []).append(int(b))
        loops = []
        while succ:
            start = next(iter(succ))
            loop = [start]
            nxt = succ[start].pop()
            if not succ[start]:
                del succ[start]
            cur = nxt
            while cur != start:
                loop.append(cur)
                if cur not in succ:
                    if strict:
                        raise NonClosedBoundary("boundary edges do not close into loops")
                    break
                cur_list = succ[cur]
                nxt = cur_list.pop()
                if not cur_list:
                    del succ[cur]
                cur = nxt
            else:
                loops.append(np.array(loop, dtype=np.int64))
                continue
            # tolerant mode reached a dead end: keep the open chain as a loop
            loops.append(np.array(loop, dtype=np.int64))
        return loops

    def _classify_boundary(self):
        n = len(self.vertices)
        self.wall_vertices = np.zeros(n, dtype=bool)
        self.rim_vertices = np.zeros(n, dtype=bool)
        if self.domain is None:
            self.wall_vertices |= self.boundary_vertices
            return
        onb = self.boundary_vertices
        if not onb.any():
            return
        d = np.abs(self.domain.signed_distance(self.vertices[onb]))
        on_wall = d <= max(self.wall_tol, 1e-9)
        idx = np.flatnonzero(onb)
        self.wall_vertices[idx[on_wall]] = True
        self.rim_vertices[idx[~on_wall]] = True
        if self.rim_vertices.any() and not self.allow_rim:
            raise ValueError("boundary vertices off the wall (pass allow_rim=True for fixtures)")

    def replace_vertices(self, vertices: np.ndarray) -> "CapillaryMesh":
        """Same topology, new positions; skips the expensive validation."""
        m = CapillaryMesh.__new__(CapillaryMesh)
        m.vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 3)
        m.triangles = self.triangles
        m.domain = self.domain
        m.allow_rim = self.allow_rim
        m.wall_tol = self.wall_tol
        m._directed_edges = self._directed_edges
        m._boundary_directed = self._boundary_directed
        m.boundary_loops = self.boundary_loops
        m.boundary_vertices = self.boundary_vertices
        m.wall_vertices = self.wall_vertices
        m.rim_vertices = self.rim_vertices
        return m

    # -- elementary quantities ----------------------------------------------

    def corner_vertices(self):
        t = self.triangles
        v = self.vertices
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def triangle_cross(self) -> np.ndarray:
        a, b, c = self.corner_vertices()
        return np.cross(b - a, c - a)

    def triangle_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.triangle_cross(), axis=1)

    def triangle_normals(self) -> np.ndarray:
        cr = self.triangle_cross()
        nrm = np.linalg.norm(cr, axis=1, keepdims=True)
        return cr / np.maximum(nrm, 1e-300)

    def vertex_areas(self) -> np.ndarray:
        areas = self.triangle_areas()
        n = len(self.vertices)
        va = np.zeros(n)
        for k in range(3):
            va += np.bincount(self.triangles[:, k], weights=areas / 3.0, minlength=n)
        return va

    def vertex_normals(self) -> np.ndarray:
        cr = self.triangle_cross()  # 2*area*unit normal
        n = len(self.vertices)
        vn = np.zeros_like(self.vertices)
        for k in range(3):
            vn += scatter_rows(self.triangles[:, k], cr, n)
        nrm = np.linalg.norm(vn, axis=1, keepdims=True)
        return vn / np.maximum(nrm, 1e-300)

    def edge_lengths(self) -> np.ndarray:
        e = self._directed_edges
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def max_edge_length(self) -> float:
        el = self.edge_lengths()
        return float(el.max()) if len(el) else 0.0

    def min_triangle_angle(self) -> float:
        a, b, c = self.corner_vertices()
        angs = []
        for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
            u, v = q - p, r - p
            cosv = np.einsum("ij,ij->i", u, v) / np.maximum(
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1), 1e-300)
            angs.append(np.arccos(np.clip(cosv, -1.0, 1.0)))
        return float(np.min(angs)) if len(a) else np.pi

    def adjacency(self) -> list[np.ndarray]:
        """1-ring vertex neighbors."""
        n = len(self.vertices)
        nbrs = [set() for _ in range(n)]
        for a, b in self._directed_edges:
            nbrs[a].add(int(b))
            nbrs[b].add(int(a))
        return [np.fromiter(s, dtype=np.int64) for s in nbrs]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0


# ---------------------------------------------------------------------------
# surface measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurfaceMeasures:
    area: float
    wetted_area: float
    volume: float


def _loop_probe(domain: AmbientDomain, pts: np.ndarray, loop_normals: np.ndarray):
    """A wall point just inside the wetted side of one boundary loop."""
    feet = domain.project_to_wall(pts)
    ebs = domain.wall_normal(feet)
    tang = loop_normals - np.einsum("ij,ij->i", loop_normals, ebs)[:, None] * ebs
    tn = np.linalg.norm(tang, axis=1)
    j0 = int(np.argmax(tn))
    nu_bar = tang[j0] / max(tn[j0], 1e-300)
    edge = np.linalg.norm(pts[(j0 + 1) % len(pts)] - pts[j0])
    return feet[j0] - 1.5 * edge * nu_bar


def _plane_loop_area_grad(pts2: np.ndarray):
    """Shoelace signed area of a closed 2D polygon and its gradient."""
    x, y = pts2[:, 0], pts2[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    s = 0.5 * float(np.sum(x * yn - xn * y))
    gx = 0.5 * (np.roll(y, -1) - np.roll(y, 1))
    gy = 0.5 * (np.roll(x, 1) - np.roll(x, -1))
    return s, np.stack([gx, gy], axis=1)


def _spherical_fan(unit_pts: np.ndarray, center: np.ndarray):
    """Signed spherical polygon area via a fan of solid-angle excesses.

    Returns (area_signed, d_area/d_unit_pts).  All inputs must be unit
    vectors; the result is the enclosed area of the left-hand region mod 4pi
    shifts that are locally constant in the vertices.
    """
    u = unit_pts
    v = np.roll(unit_pts, -1, axis=0)
    c = center
    det = np.einsum("ij,ij->i", np.cross(np.broadcast_to(c, u.shape), u), v)
    e = 1.0 + u @ c + np.einsum("ij,ij->i", u, v) + v @ c
    area = float(np.sum(2.0 * np.arctan2(det, e)))
    denom = det**2 + e**2
    # d(2*atan2(det,e)) = 2*(e*d(det) - det*de)/denom
    dd_du = np.cross(v, np.broadcast_to(c, v.shape))
    dd_dv = np.cross(np.broadcast_to(c, u.shape), u)
    de_du = np.broadcast_to(c, u.shape) + v
    de_dv = u + np.broadcast_to(c, u.shape)
    coef = 2.0 / denom
    g = np.zeros_like(u)
    g += coef[:, None] * (e[:, None] * dd_du - det[:, None] * de_du)
    g_next = coef[:, None] * (e[:, None] * dd_dv - det[:, None] * de_dv)
    g += np.roll(g_next, 1, axis=0)
    return area, g


def _wall_contributions(mesh: CapillaryMesh, domain: AmbientDomain,
                        vertex_normals: np.ndarray | None = None):
    """Wetted area per loop plus the wall flux factor used in the volume.

    Returns a list of records, one per boundary loop:
      (loop, kind, signed_value, grad(n_loop,3), orient_sign, volume_factor)
    with wetted contribution = orient_sign * signed_value.
    """
    records = []
    if not mesh.boundary_loops:
        return records
    vn = vertex_normals if vertex_normals is not None else mesh.vertex_normals()
    for loop in mesh.boundary_loops:
        if mesh.rim_vertices[loop].any():
            continue
        pts = mesh.vertices[loop]
        probe = _loop_probe(domain, pts, vn[loop])

        if domain.kind == BALL:
            probe = probe / np.linalg.norm(probe)
            unit = pts / np.linalg.norm(pts, axis=1, keepdims=True)
            area, grad_u = _spherical_fan(unit, probe)
            # chain rule through the normalisation of the vertex positions
            r = np.linalg.norm(pts, axis=1, keepdims=True)
            g = (grad_u - unit * np.einsum("ij,ij->i", grad_u, unit)[:, None]) / r
            sign = 1.0 if area >= 0 else -1.0
            records.append((loop, BALL, area, g, sign, 1.0 / 3.0))
        else:
            # plane wall: shoelace in (x, y); decide the wetted side by winding
            s, g2 = _plane_loop_area_grad(pts[:, :2])
            raw = np.arctan2(pts[:, 1] - probe[1], pts[:, 0] - probe[0])
            inc = np.diff(np.concatenate([raw, raw[:1]]))
            inc = (inc + np.pi) % (2 * np.pi) - np.pi
            winding = float(np.round(np.sum(inc) / (2 * np.pi)))
            inside = winding != 0.0
            sign = np.sign(s) if inside else -np.sign(s)
            sign = sign if sign != 0 else 1.0
            g = np.zeros((len(loop), 3))
            g[:, :2] = g2
            if domain.kind == SLAB and abs(pts[0, 2] - domain.slab_height) < abs(pts[0, 2]):
                vol_factor = domain.slab_height / 3.0
            else:
                vol_factor = 0.0
            records.append((loop, domain.kind, s, g, float(sign), vol_factor))
    return records


def measures(mesh: CapillaryMesh, domain: AmbientDomain | None = None) -> SurfaceMeasures:
    """Area, wetted wall area and enclosed volume of the mesh."""
    if mesh.is_empty:
        return SurfaceMeasures(0.0, 0.0, 0.0)
    domain = domain or mesh.domain
    if domain is None:
        raise ValueError("measures needs an ambient domain")
    area = float(mesh.triangle_areas().sum())
    a, b, c = mesh.corner_vertices()
    vol_mesh = float(np.einsum("ij,ij->", a, np.cross(b, c))) / 6.0
    wetted_ball = 0.0
    wetted_plane = 0.0
    vol_wall = 0.0
    for loop, kind, value, _g, sign, vol_factor in _wall_contributions(mesh, domain):
        contrib = sign * value
        if kind == BALL:
            wetted_ball += contrib
        else:
            wetted_plane += contrib
            vol_wall += vol_factor * contrib
    if domain.kind == BALL:
        wetted_ball = wetted_ball % (4.0 * np.pi)
        vol_wall += wetted_ball / 3.0
    volume = vol_mesh + vol_wall
    return SurfaceMeasures(area, wetted_ball + wetted_plane, volume)


# ---------------------------------------------------------------------------
# curvature estimators
# ---------------------------------------------------------------------------


@dataclass
class CurvatureField:
    normals: np.ndarray        # (n, 3)
    tangent1: np.ndarray       # (n, 3)
    tangent2: np.ndarray       # (n, 3)
    mean: np.ndarray           # cotangent estimate of H = k1 + k2
    shape: np.ndarray          # (n, 2, 2) quadric-fit shape operator in the tangent frame
    lambda1: np.ndarray
    lambda2: np.ndarray
    total_sq: np.ndarray       # |A|^2 = l1^2 + l2^2
    mean_quadric: np.ndarray   # trace of the fitted shape operator
    normals_refined: np.ndarray = None  # quadric-corrected normals (O(h^2) at one-sided stars)

    def shape_along(self, i: int, v: np.ndarray) -> float:
        """A(v, v) at vertex i for a unit tangent vector v."""
        cv = np.array([np.dot(v, self.tangent1[i]), np.dot(v, self.tangent2[i])])
        n = np.linalg.norm(cv)
        if n < 1e-12:
            return 0.0
        cv /= n
        return float(cv @ self.shape[i] @ cv)


def _cotangent_mean(mesh: CapillaryMesh, normals: np.ndarray) -> np.ndarray:
    v = mesh.vertices
    t = mesh.triangles
    n = len(v)
    acc = np.zeros((n, 3))
    for k in range(3):
        i = t[:, k]
        j = t[:, (k + 1) % 3]
        o = t[:, (k + 2) % 3]
        u1 = v[i] - v[o]
        u2 = v[j] - v[o]
        cross = np.linalg.norm(np.cross(u1, u2), axis=1)
        cot = np.einsum("ij,ij->i", u1, u2) / np.maximum(cross, 1e-300)
        w = 0.5 * cot[:, None] * (v[i] - v[j])
        acc += scatter_rows(i, w, n)
        acc -= scatter_rows(j, w, n)
    va = mesh.vertex_areas()
    K = acc / np.maximum(va[:, None], 1e-300)
    return np.einsum("ij,ij->i", K, normals)


def _two_ring(mesh: CapillaryMesh, max_neighbors: int = 32):
    """Padded 2-ring neighbor table (n, K) with -1 padding."""
    adj = mesh.adjacency()
    n = len(mesh.vertices)
    table = -np.ones((n, max_neighbors), dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        ring = set(adj[i].tolist())
        for j in adj[i]:
            ring.update(adj[j].tolist())
        ring.discard(i)
        nb = sorted(ring)[:max_neighbors]
        table[i, : len(nb)] = nb
        counts[i] = len(nb)
    return table, counts


def _quadric_shape(mesh: CapillaryMesh, normals: np.ndarray, t1: np.ndarray, t2: np.ndarray):
    """Batched least squares of local quadric graphs over 2-rings."""
    n = len(mesh.vertices)
    table, counts = _two_ring(mesh)
    if counts.min(initial=6) < 5:
        bad = int(np.argmin(counts))
        raise DegenerateStar(f"vertex {bad} has a {counts[bad]}-point 2-ring")
    safe = np.where(table >= 0, table, 0)
    rel = mesh.vertices[safe] - mesh.vertices[:, None, :]   # (n, K, 3)
    valid = table >= 0
    x = np.einsum("nkj,nj->nk", rel, t1)
    y = np.einsum("nkj,nj->nk", rel, t2)
    z = np.einsum("nkj,nj->nk", rel, normals)
    dist = np.where(valid, np.linalg.norm(rel, axis=2), 0.0)
    scale = np.maximum(dist.max(axis=1), 1e-300)[:, None]
    x, y, z = x / scale, y / scale, z / scale
    cols = np.stack([0.5 * x * x, x * y, 0.5 * y * y, x, y,
                     np.ones_like(x)], axis=2)          # (n, K, 6)
    cols = np.where(valid[:, :, None], cols, 0.0)
    z = np.where(valid, z, 0.0)
    ata = np.einsum("nki,nkj->nij", cols, cols)
    atb = np.einsum("nki,nk->ni", cols, z)
    ata += 1e-13 * np.eye(6)[None, :, :]
    try:
        sol = np.linalg.solve(ata, atb[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateStar("singular quadric system") from exc
    # undo the per-vertex rescaling: quadratic coefficients pick up 1/scale
    aq, bq, cq = (sol[:, k] / scale[:, 0] for k in range(3))
    d, e = sol[:, 3], sol[:, 4]
    # the fitted graph slope corrects the averaged vertex normal
    refined = normals - d[:, None] * t1 - e[:, None] * t2
    refined /= np.linalg.norm(refined, axis=1, keepdims=True)
    gamma = np.sqrt(1.0 + d * d + e * e)
    hess = np.empty((n, 2, 2))
    hess[:, 0, 0], hess[:, 0, 1] = aq, bq
    hess[:, 1, 0], hess[:, 1, 1] = bq, cq
    first = np.empty((n, 2, 2))
    first[:, 0, 0], first[:, 0, 1] = 1.0 + d * d, d * e
    first[:, 1, 0], first[:, 1, 1] = d * e, 1.0 + e * e
    w, q = np.linalg.eigh(first)
    inv_sqrt = np.einsum("nij,nj,nkj->nik", q, 1.0 / np.sqrt(w), q)
    # convention A = <grad nu, .>: sphere with outward nu has A = +I/R
    shape = -np.einsum("nij,njk,nkl->nil", inv_sqrt, hess / gamma[:, None, None], inv_sqrt)
    return shape, refined


def curvatures(mesh: CapillaryMesh) -> CurvatureField:
    """Per-vertex normals, cotangent H, quadric-fit shape operator."""
    normals = mesh.vertex_normals()
    t1 = np.cross(normals, np.where(np.abs(normals[:, [0]]) < 0.9,
                                    [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]))
    t1 /= np.maximum(np.linalg.norm(t1, axis=1, keepdims=True), 1e-300)
    t2 = np.cross(normals, t1)
    mean = _cotangent_mean(mesh, normals)
    shape, refined = _quadric_shape(mesh, normals, t1, t2)
    lam = np.linalg.eigvalsh(shape)
    lam1, lam2 = lam[:, 0], lam[:, 1]
    return CurvatureField(
        normals=normals, tangent1=t1, tangent2=t2, mean=mean, shape=shape,
        lambda1=lam1, lambda2=lam2, total_sq=lam1**2 + lam2**2,
        mean_quadric=lam1 + lam2, normals_refined=refined,
    )


# ---------------------------------------------------------------------------
# contact data
# ---------------------------------------------------------------------------


@dataclass
class ContactData:
    indices: np.ndarray      # wall boundary vertex indices
    angles: np.ndarray       # angle between nu and eta_bar
    normals: np.ndarray      # surface normal nu at the boundary
    eta: np.ndarray          # outward conormal of the boundary in the surface
    nu_bar: np.ndarray       # wall conormal pointing out of the enclosed region
    eta_bar: np.ndarray      # outward wall normal at the footpoint

    def frame_identity_residual(self, theta: float) -> np.ndarray:
        """|eta - (-cot(theta) nu + eta_bar/sin(theta))| at each boundary vertex.

        Vanishes exactly when the contact angle equals theta (the outward-nu
        counterpart of the conormal frame relation).
        """
        pred = -np.cos(theta) / np.sin(theta) * self.normals + self.eta_bar / np.sin(theta)
        return np.linalg.norm(self.eta - pred, axis=1)


def contact_angles(mesh: CapillaryMesh, domain: AmbientDomain | None = None) -> ContactData:
    domain = domain or mesh.domain
    if domain is None:
        raise ValueError("contact angles need an ambient domain")
    vn = mesh.vertex_normals()
    tri_centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    # map each wall vertex to its loop neighbors
    prev_nb = {}
    next_nb = {}
    for loop in mesh.boundary_loops:
        for j, v in enumerate(loop):
            next_nb[int(v)] = int(loop[(j + 1) % len(loop)])
            prev_nb[int(v)] = int(loop[j - 1])
    idx = np.flatnonzero(mesh.wall_vertices)
    # incident-triangle centroid mean, for orienting the conormal outward
    cent_sum = np.zeros_like(mesh.vertices)
    cent_cnt = np.zeros(len(mesh.vertices))
    for k in range(3):
        np.add.at(cent_sum, mesh.triangles[:, k], tri_centroids)
        np.add.at(cent_cnt, mesh.triangles[:, k], 1.0)

    angs, etas, nubars, etabars, nus = [], [], [], [], []
    for v in idx:
        fr = project_and_frame(domain, mesh.vertices[v])
        nu = vn[v]
        cosang = float(np.clip(np.dot(nu, fr.eta_bar), -1.0, 1.0))
        angs.append(np.arccos(cosang))
        t_hat = mesh.vertices[next_nb[v]] - mesh.vertices[prev_nb[v]]
        t_hat /= max(np.linalg.norm(t_hat), 1e-300)
        eta = np.cross(nu, t_hat)
        eta /= max(np.linalg.norm(eta), 1e-300)
        inward = cent_sum[v] / max(cent_cnt[v], 1.0) - mesh.vertices[v]
        if np.dot(eta, inward) > 0:
            eta = -eta
        tang = nu - np.dot(nu, fr.eta_bar) * fr.eta_bar
        tn = np.linalg.norm(tang)
        if tn > 1e-12:
            nubar = tang / tn
        else:
            proj = eta - np.dot(eta, fr.eta_bar) * fr.eta_bar
            nubar = proj / max(np.linalg.norm(proj), 1e-300)
        nus.append(nu)
        etas.append(eta)
        nubars.append(nubar)
        etabars.append(fr.eta_bar)
    return ContactData(
        indices=idx,
        angles=np.array(angs),
        normals=np.array(nus).reshape(-1, 3),
        eta=np.array(etas).reshape(-1, 3),
        nu_bar=np.array(nubars).reshape(-1, 3),
        eta_bar=np.array(etabars).reshape(-1, 3),
    )


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def _hex_disk_pattern(n: int):
    """Hexagonal disk triangulation: ring i has 6i vertices, n rings."""
    def base(i):
        return 1 + 3 * i * (i - 1) if i > 0 else 0

    def ring_index(i, t):
        return 0 if i == 0 else base(i) + (t % (6 * i))

    coords = [(0.0, 0.0)]
    for i in range(1, n + 1):
        for t in range(6 * i):
            ang = 2.0 * np.pi * t / (6 * i)
            coords.append((i / n, ang))
    tris = []
    for i in range(n):
        for s in range(6):
            for j in range(i + 1):
                tris.append((ring_index(i + 1, s * (i + 1) + j),
                             ring_index(i + 1, s * (i + 1) + j + 1),
                             ring_index(i, s * i + j)))
            for j in range(i):
                tris.append((ring_index(i, s * i + j),
                             ring_index(i + 1, s * (i + 1) + j + 1),
                             ring_index(i, s * i + j + 1)))
    return np.array(coords), np.array(tris, dtype=np.int64)


def make_spherical_cap(domain: AmbientDomain, theta: float, radius: float = 1.0,
                       level: int = 3, rings_base: int = 2) -> CapillaryMesh:
    """Cap solving H = 2/R, <nu, eta_bar> = cos(theta) on the half-space wall.

    Sphere center at height R cos(theta); polar span pi - theta from the apex;
    each level halves the edge length.
    """
    if domain.kind != HALFSPACE:
        raise ValueError("spherical caps are built on the half-space domain")
    if not 0.0 < theta < np.pi:
        raise ValueError("theta must lie in (0, pi)")
    if radius <= 0 or level < 0:
        raise ValueError("radius must be positive and level >= 0")
    n = rings_base * 2**level
    coords, tris = _hex_disk_pattern(n)
    span = np.pi - theta
    phi = coords[:, 0] * span
    psi = coords[:, 1]
    cz = radius * np.cos(theta)
    verts = np.column_stack([
        radius * np.sin(phi) * np.cos(psi),
        radius * np.sin(phi) * np.sin(psi),
        cz + radius * np.cos(phi),
    ])
    on_rim = np.isclose(coords[:, 0], 1.0)
    verts[on_rim, 2] = 0.0  # boundary circle exactly on the wall
    return CapillaryMesh(verts, tris, domain=domain)


def make_flat_disk(domain: AmbientDomain, level: int = 3, rings_base: int = 2) -> CapillaryMesh:
    """Equatorial unit disk in the unit ball (boundary on the sphere wall)."""
    if domain.kind != BALL:
        raise ValueError("the flat disk fixture lives in the unit ball")
    n = rings_base * 2**level
    coords, tris = _hex_disk_pattern(n)
    r = coords[:, 0]
    verts = np.column_stack([r * np.cos(coords[:, 1]), r * np.sin(coords[:, 1]),
                             np.zeros(len(coords))])
    return CapillaryMesh(verts, tris, domain=domain)


def make_subdivision_sphere(radius: float = 1.0, level: int = 3,
                            center=(0.0, 0.0, 0.0)) -> CapillaryMesh:
    """Closed icosphere with outward orientation (no boundary)."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    for _ in range(level):
        edge_mid: dict[tuple[int, int], int] = {}
        new_faces = []
        verts_list = list(verts)

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in edge_mid:
                m = verts_list[i] + verts_list[j]
                m /= np.linalg.norm(m)
                edge_mid[key] = len(verts_list)
                verts_list.append(m)
            return edge_mid[key]

        for f in faces:
            a, b, c = (int(x) for x in f)
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(verts_list)
        verts /= np.linalg.norm(verts, axis=1, keepdims=True)
        faces = np.array(new_faces, dtype=np.int64)
    return CapillaryMesh(radius * verts + np.asarray(center, dtype=float), faces)


def make_wall_strip(domain: AmbientDomain, tilt: float, width: float = 2.0,
                    height: float = 1.0, level: int = 3) -> CapillaryMesh:
    """Planar strip meeting the half-space wall at angle(nu, eta_bar) = tilt.

    The strip spans the wall line y in [-width/2, width/2]; the three off-wall
    sides are rim vertices.  Contact angle arccos<nu, eta_bar> equals tilt.
    """
    if domain.kind != HALFSPACE:
        raise ValueError("wall strips are built on the half-space domain")
    nu = np.array([np.sin(tilt), 0.0, -np.cos(tilt)])
    slope = np.array([np.cos(tilt), 0.0, np.sin(tilt)])  # in-plane, up from the wall
    nv = 2 * 2**level
    nu_count = max(2, int(round(nv * width / height)))
    us = np.linspace(-width / 2, width / 2, nu_count + 1)
    vs = np.linspace(0.0, height, nv + 1)
    uu, vvv = np.meshgrid(us, vs, indexing="ij")
    verts = (uu.ravel()[:, None] * np.array([0.0, 1.0, 0.0])
             + vvv.ravel()[:, None] * slope)
    def vid(i, j):
        return i * (nv + 1) + j
    tris = []
    for i in range(nu_count):
        for j in range(nv):
            tris.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)])
            tris.append([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)])
    mesh = CapillaryMesh(verts, np.array(tris, dtype=np.int64), domain=domain, allow_rim=True)
    # orient so the triangle normals match nu
    if np.dot(mesh.triangle_normals().mean(axis=0), nu) < 0:
        mesh = CapillaryMesh(verts, np.array(tris, dtype=np.int64)[:, ::-1],
                             domain=domain, allow_rim=True)
    return mesh


def make_catenoid_band(domain: AmbientDomain, theta: float, t_top: float = 1.0,
                       level: int = 3) -> CapillaryMesh:
    """Exact capillary minimal band: catenoid r = cosh(t), axis normal to the wall.

    Meets the half-space wall at t0 = arctanh(cos theta) with
    <nu, e_inward> = cos(theta) for the normal oriented toward the axis; the
    top circle (t = t_top) is a rim.
    """
    if domain.kind != HALFSPACE:
        raise ValueError("catenoid bands are built on the half-space domain")
    t0 = np.arctanh(np.cos(theta))
    if t_top <= t0:
        raise ValueError("t_top must exceed arctanh(cos theta)")
    nt = 4 * 2**level
    tmid = 0.5 * (t0 + t_top)
    npsi = max(12, int(round(2 * np.pi * np.cosh(tmid) * nt / (t_top - t0))))
    ts = np.linspace(t0, t_top, nt + 1)
    psis = np.linspace(0.0, 2 * np.pi, npsi, endpoint=False)
    tt, pp = np.meshgrid(ts, psis, indexing="ij")
    verts = np.column_stack([
        np.cosh(tt.ravel()) * np.cos(pp.ravel()),
        np.cosh(tt.ravel()) * np.sin(pp.ravel()),
        tt.ravel() - t0,
    ])
    def vid(i, j):
        return i * npsi + (j % npsi)
    tris = []
    for i in range(nt):
        for j in range(npsi):
            tris.append([vid(i, j), vid(i, j + 1), vid(i + 1, j + 1)])
            tris.append([vid(i, j), vid(i + 1, j + 1), vid(i + 1, j)])
    tris = np.array(tris, dtype=np.int64)
    mesh = CapillaryMesh(verts, tris, domain=domain, allow_rim=True)
    # orient the normal toward the axis (the w-positive choice used by the
    # test-function identities)
    probe = mesh.triangle_normals()[0]
    centroid = verts[tris[0]].mean(axis=0)
    inward = -np.array([centroid[0], centroid[1], 0.0])
    if np.dot(probe, inward) < 0:
        mesh = CapillaryMesh(verts, tris[:, ::-1], domain=domain, allow_rim=True)
    return mesh


def make_slab_plane(domain: AmbientDomain, width: float = 2.0, level: int = 3) -> CapillaryMesh:
    """Vertical plane strip {x1 = 0} spanning the slab between both walls."""
    if domain.kind != SLAB:
        raise ValueError("slab planes are built on the slab domain")
    h = domain.slab_height
    nv = 2 * 2**level
    nu_count = max(2, int(round(nv * width / h)))
    us = np.linspace(-width / 2, width / 2, nu_count + 1)
    vs = np.linspace(0.0, h, nv + 1)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    verts = np.column_stack([np.zeros(uu.size), uu.ravel(), vv.ravel()])
    def vid(i, j):
        return i * (nv + 1) + j
    tris = []
    for i in range(nu_count):
        for j in range(nv):
            tris.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)])
            tris.append([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return CapillaryMesh(verts, np.array(tris, dtype=np.int64), domain=domain, allow_rim=True)


# ---------------------------------------------------------------------------
# OFF I/O
# ---------------------------------------------------------------------------


def write_off(mesh: CapillaryMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(mesh.vertices)} {len(mesh.triangles)} 0\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def read_off(path, domain: AmbientDomain | None = None, allow_rim: bool = False) -> CapillaryMesh:
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens or tokens[0] != "OFF":
        raise ValueError("not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    tris = []
    for _ in range(nf):
        k = int(tokens[pos])
        if k != 3:
            raise ValueError("only triangle faces are supported")
        tris.append([int(tokens[pos + 1]), int(tokens[pos + 2]), int(tokens[pos + 3])])
        pos += 4
    return CapillaryMesh(verts, np.array(tris, dtype=np.int64), domain=domain, allow_rim=allow_rim)
