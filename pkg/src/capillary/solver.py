"""Constrained gradient flow to capillary critical points, plus diagnostics.

relax() runs Armijo-backtracking gradient descent on the discrete capillary
energy, re-projecting wall vertices onto the wall after each step.  Since the
unconstrained energy of a cap family rho^2 - rho^3 makes every nonminimal
critical point a saddle along dilation, an optional volume lock projects that
single unstable direction out of the descent; the reported curvature and
angle residuals are measured directly on the final mesh either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ambient import AmbientDomain
from .energy import EnergyParams, capillary_energy, energy_gradient
from .errors import MeshDegenerated
from .mesh import CapillaryMesh, contact_angles, curvatures, measures


@dataclass
class RelaxOptions:
    max_iter: int = 4000
    tol_grad: float | None = None   # raw sup-norm tolerance; default 0.1 * median(h)^2
    armijo_sigma: float = 0.5
    armijo_c1: float = 1e-4
    smooth_every: int = 10
    smooth_weight: float = 0.1
    volume_lock: bool = False
    min_angle_deg: float = 0.5
    preconditioned: bool = True
    plateau_window: int = 80        # stop when energy stalls over this many steps
    plateau_tol: float = 1e-13


@dataclass
class ResidualReport:
    max_mean_curvature_residual: float
    max_angle_residual: float
    density_scan: list = field(default_factory=list)  # per probe: (rho, ratio) pairs
    monotone: bool = True
    boundary_density_class: list = field(default_factory=list)


@dataclass
class SolveReport:
    final_mesh: CapillaryMesh
    iterations: int
    final_energy: float
    gradient_norm: float
    residuals: ResidualReport
    converged: bool
    energy_history: list = field(default_factory=list)


def _volume_gradient(mesh: CapillaryMesh) -> np.ndarray:
    """d(volume)/d(vertices) of the mesh flux term (wall loops contribute
    only through wetted terms, which the lock deliberately leaves free)."""
    v, t = mesh.vertices, mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    g = np.zeros_like(v)
    np.add.at(g, t[:, 0], np.cross(b, c) / 6.0)
    np.add.at(g, t[:, 1], np.cross(c, a) / 6.0)
    np.add.at(g, t[:, 2], np.cross(a, b) / 6.0)
    return g


def _tangential_smooth(mesh: CapillaryMesh, domain: AmbientDomain, weight: float) -> np.ndarray:
    """Area-weighted umbrella step projected to the local tangent plane.

    Interior vertices slide toward the area-weighted centroid of incident
    triangles; boundary vertices slide along their loop (pure contact-line
    reparametrization).  First-order shape preserving.
    """
    from .mesh import scatter_rows

    v = mesh.vertices
    vn = mesh.vertex_normals()
    n = len(v)
    t = mesh.triangles
    areas = mesh.triangle_areas()
    cent = v[t].mean(axis=1)
    num = np.zeros((n, 3))
    den = np.zeros(n)
    for k in range(3):
        num += scatter_rows(t[:, k], areas[:, None] * cent, n)
        den += np.bincount(t[:, k], weights=areas, minlength=n)
    target = num / np.maximum(den[:, None], 1e-300)
    disp = target - v
    disp -= np.einsum("ij,ij->i", disp, vn)[:, None] * vn
    disp[mesh.boundary_vertices] = 0.0
    for loop in mesh.boundary_loops:
        pts = v[loop]
        mid = 0.5 * (np.roll(pts, -1, axis=0) + np.roll(pts, 1, axis=0))
        that = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
        that /= np.maximum(np.linalg.norm(that, axis=1, keepdims=True), 1e-300)
        slide = np.einsum("ij,ij->i", mid - pts, that)[:, None] * that
        disp[loop] = slide
    disp[mesh.rim_vertices] = 0.0
    return v + weight * disp


def relax(mesh: CapillaryMesh, domain: AmbientDomain, params: EnergyParams,
          opts: RelaxOptions | None = None) -> SolveReport:
    """Gradient descent with backtracking; wall vertices stay on the wall."""
    opts = opts or RelaxOptions()
    cur = mesh
    el = cur.edge_lengths()
    h_med = float(np.median(el)) if len(el) else 1.0
    h_cap = cur.max_edge_length()
    tol = opts.tol_grad if opts.tol_grad is not None else 0.1 * h_med * h_med
    energy = capillary_energy(cur, domain, params)
    history = [energy]
    rim = mesh.rim_vertices
    converged = False
    it = 0
    gnorm = np.inf
    step0 = 0.5 * h_med * h_med if opts.preconditioned else h_med
    step_cap = 8.0 * h_med * h_med if opts.preconditioned else h_cap
    prev_x = prev_g = None

    def descent_data(m):
        g = energy_gradient(m, domain, params)
        g[rim] = 0.0
        va = np.maximum(m.vertex_areas(), 1e-300)
        d = g / va[:, None] if opts.preconditioned else g.copy()
        if opts.volume_lock:
            vg = _volume_gradient(m)
            if m.wall_vertices.any():
                idx = np.flatnonzero(m.wall_vertices)
                eb = domain.wall_normal(m.vertices[idx])
                vg[idx] -= np.einsum("ij,ij->i", vg[idx], eb)[:, None] * eb
            vg[rim] = 0.0
            vd = vg / va[:, None] if opts.preconditioned else vg
            denom = float(np.einsum("ij,ij->", vg, vd))
            if denom > 1e-300:
                # keep the step volume-neutral to first order
                d -= (np.einsum("ij,ij->", vg, d) / denom) * vd
            g = d * va[:, None] if opts.preconditioned else d
        return g, d

    for it in range(1, opts.max_iter + 1):
        g, d = descent_data(cur)
        gnorm = float(np.abs(g).max())
        if gnorm <= tol:
            converged = True
            break
        # Barzilai-Borwein spectral step with Armijo safeguard
        if prev_x is not None:
            dx = cur.vertices - prev_x
            dg = g - prev_g
            num = float(np.einsum("ij,ij->", dx, dg))
            den = float(np.einsum("ij,ij->", dg, dg))
            if num > 0 and den > 1e-300:
                step0 = min(max(num / den, 1e-4 * step_cap), step_cap)
        prev_x, prev_g = cur.vertices.copy(), g
        slope = float(np.einsum("ij,ij->", g, d))
        # keep per-step displacements a fraction of the edge length
        dmax = float(np.abs(d).max())
        step = min(step0, 0.25 * h_med / max(dmax, 1e-300))
        accepted = False
        for _ in range(50):
            trial_mesh = _project_wall(cur.replace_vertices(cur.vertices - step * d), domain)
            e_new = capillary_energy(trial_mesh, domain, params)
            if e_new <= energy - opts.armijo_c1 * step * slope:
                accepted = True
                break
            step *= opts.armijo_sigma
        if not accepted:
            converged = False
            break
        cur = trial_mesh
        energy = e_new
        history.append(energy)
        if opts.smooth_every and it % opts.smooth_every == 0:
            smoothed = cur.replace_vertices(_tangential_smooth(cur, domain, opts.smooth_weight))
            smoothed = _project_wall(smoothed, domain)
            e_s = capillary_energy(smoothed, domain, params)
            if np.isfinite(e_s) and smoothed.min_triangle_angle() >= np.radians(opts.min_angle_deg):
                cur = smoothed
                energy = e_s
                history.append(energy)
        if (opts.plateau_window and len(history) > opts.plateau_window
                and history[-opts.plateau_window] - history[-1]
                < opts.plateau_tol * max(1.0, abs(history[-1]))):
            converged = True
            g, _ = descent_data(cur)
            gnorm = float(np.abs(g).max())
            break
        min_ang = cur.min_triangle_angle()
        if min_ang < np.radians(opts.min_angle_deg):
            cur = _edge_flip_repair(cur)
            if cur.min_triangle_angle() < np.radians(opts.min_angle_deg):
                raise MeshDegenerated(
                    f"min triangle angle {np.degrees(cur.min_triangle_angle()):.3f} deg")
    res = residuals(cur, domain, params)
    return SolveReport(final_mesh=cur, iterations=it, final_energy=energy,
                       gradient_norm=gnorm, residuals=res, converged=converged,
                       energy_history=history)


def _project_wall(mesh: CapillaryMesh, domain: AmbientDomain) -> CapillaryMesh:
    v = mesh.vertices.copy()
    idx = np.flatnonzero(mesh.wall_vertices)
    if len(idx):
        v[idx] = domain.project_to_wall(v[idx])
    return mesh.replace_vertices(v)


def _edge_flip_repair(mesh: CapillaryMesh) -> CapillaryMesh:
    """Flip interior edges of the worst triangles when that raises min angles."""
    tris = mesh.triangles.copy()
    v = mesh.vertices

    def tri_min_angle(t):
        p = v[t]
        best = np.pi
        for k in range(3):
            u1 = p[(k + 1) % 3] - p[k]
            u2 = p[(k + 2) % 3] - p[k]
            cosv = u1 @ u2 / max(np.linalg.norm(u1) * np.linalg.norm(u2), 1e-300)
            best = min(best, np.arccos(np.clip(cosv, -1, 1)))
        return best

    edge_map: dict[tuple[int, int], list[int]] = {}
    for ti, t in enumerate(tris):
        for k in range(3):
            key = tuple(sorted((int(t[k]), int(t[(k + 1) % 3]))))
            edge_map.setdefault(key, []).append(ti)
    angles = np.array([tri_min_angle(t) for t in tris])
    order = np.argsort(angles)
    changed = False
    for ti in order[: max(8, len(order) // 50)]:
        t = tris[ti]
        for k in range(3):
            key = tuple(sorted((int(t[k]), int(t[(k + 1) % 3]))))
            pair = edge_map.get(key, [])
            if len(pair) != 2:
                continue
            tj = pair[0] if pair[1] == ti else pair[1]
            a, b = key
            c1 = [x for x in tris[ti] if x not in key][0]
            c2 = [x for x in tris[tj] if x not in key][0]
            old = min(tri_min_angle(tris[ti]), tri_min_angle(tris[tj]))
            new_t1 = np.array([c1, c2, b])
            new_t2 = np.array([c2, c1, a])
            new = min(tri_min_angle(new_t1), tri_min_angle(new_t2))
            if new > old * 1.5:
                tris[ti], tris[tj] = new_t1, new_t2
                changed = True
                break
    if not changed:
        return mesh
    try:
        return CapillaryMesh(v, tris, domain=mesh.domain, allow_rim=mesh.allow_rim)
    except Exception:
        return mesh


# ---------------------------------------------------------------------------
# residual diagnostics
# ---------------------------------------------------------------------------

DENSITY_CLASS_NAMES = ("halfPlane", "twoSheets", "touchingLow", "touchingHigh",
                       "doubleTouch", "doubleTouchWall")


def density_class_values(theta: float) -> dict[str, float]:
    u = np.cos(theta)
    return {
        "halfPlane": 0.5 * (1.0 + u),
        "twoSheets": 1.0,
        "touchingLow": 1.0,
        "touchingHigh": 1.0 + u,
        "doubleTouch": 2.0,
        "doubleTouchWall": 2.0 + u,
    }


def _area_in_ball(mesh: CapillaryMesh, p: np.ndarray, rho: float, depth: int = 3) -> float:
    """Triangle area inside B_rho(p), with recursive splitting at the rim."""
    v = mesh.vertices[mesh.triangles]

    def rec(tris, d):
        if len(tris) == 0:
            return 0.0
        r = np.linalg.norm(tris - p, axis=2)
        inside = (r <= rho).all(axis=1)
        outside = (r >= rho).all(axis=1)
        cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        total = float(areas[inside].sum())
        mixed = ~inside & ~outside
        if not mixed.any():
            return total
        mt = tris[mixed]
        if d == 0:
            cent = mt.mean(axis=1)
            frac = (np.linalg.norm(cent - p, axis=1) <= rho).astype(float)
            return total + float((0.5 * np.linalg.norm(
                np.cross(mt[:, 1] - mt[:, 0], mt[:, 2] - mt[:, 0]), axis=1) * frac).sum())
        m01 = 0.5 * (mt[:, 0] + mt[:, 1])
        m12 = 0.5 * (mt[:, 1] + mt[:, 2])
        m20 = 0.5 * (mt[:, 2] + mt[:, 0])
        subs = np.concatenate([
            np.stack([mt[:, 0], m01, m20], axis=1),
            np.stack([m01, mt[:, 1], m12], axis=1),
            np.stack([m12, mt[:, 2], m20], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ])
        return total + rec(subs, d - 1)

    return rec(v, depth)


def _wetted_in_disk(mesh: CapillaryMesh, domain: AmbientDomain, p: np.ndarray,
                    rho: float, n_r: int = 24, n_psi: int = 48) -> float:
    """Wetted wall area inside the wall disk of radius rho about p (plane walls)."""
    if domain.kind == "ball":
        return _wetted_in_disk_sphere(mesh, domain, p, rho)
    loops = [lp for lp in mesh.boundary_loops if not mesh.rim_vertices[lp].any()]
    if not loops:
        return 0.0
    rr = (np.arange(n_r) + 0.5) / n_r * rho
    pp = (np.arange(n_psi) + 0.5) / n_psi * 2 * np.pi
    R, P = np.meshgrid(rr, pp, indexing="ij")
    qx = p[0] + R * np.cos(P)
    qy = p[1] + R * np.sin(P)
    wind = np.zeros(R.shape)
    for lp in loops:
        pts = mesh.vertices[lp]
        raw = np.arctan2(pts[None, None, :, 1] - qy[..., None],
                         pts[None, None, :, 0] - qx[..., None])
        inc = np.diff(np.concatenate([raw, raw[..., :1]], axis=-1), axis=-1)
        inc = (inc + np.pi) % (2 * np.pi) - np.pi
        wind += np.round(inc.sum(axis=-1) / (2 * np.pi))
    inside = wind != 0
    cell = (rho / n_r) * (2 * np.pi / n_psi) * R
    return float(cell[inside].sum())


def _wetted_in_disk_sphere(mesh: CapillaryMesh, domain: AmbientDomain, p: np.ndarray,
                           rho: float, n_samples: int = 4000) -> float:
    """Monte-Carlo style (Fibonacci) wetted area near a ball wall point."""
    from .mesh import _spherical_fan

    loops = [lp for lp in mesh.boundary_loops if not mesh.rim_vertices[lp].any()]
    if not loops:
        return 0.0
    i = np.arange(n_samples) + 0.5
    z = 1 - 2 * i / n_samples
    ga = np.pi * (1 + 5**0.5) * i
    s = np.sqrt(1 - z * z)
    pts = np.stack([s * np.cos(ga), s * np.sin(ga), z], axis=1)
    near = np.linalg.norm(pts - p, axis=1) <= rho
    if not near.any():
        return 0.0
    acc = 0.0
    weight = 4 * np.pi / n_samples
    for q in pts[near]:
        wind = 0.0
        for lp in loops:
            unit = mesh.vertices[lp] / np.linalg.norm(mesh.vertices[lp], axis=1, keepdims=True)
            area, _ = _spherical_fan(unit, q)
            wind += area
        # q is in the wetted region iff the fan areas sum to the region measure
        if abs(wind % (4 * np.pi)) > 1e-6 and (wind % (4 * np.pi)) < 2 * np.pi:
            acc += weight
    return acc


def residuals(mesh: CapillaryMesh, domain: AmbientDomain, params: EnergyParams,
              probe_points=None, monotonicity_alpha: float = 1.0) -> ResidualReport:
    """PDE/boundary residuals of Eq. H = c, angle = theta, plus density scans.

    The curvature residual is evaluated at interior vertices whose full
    cotangent stencil is interior: at vertices adjacent to the contact line
    the pointwise estimator mixes the boundary condition into the PDE
    residual and does not converge, while the split interior/boundary
    residual pair mirrors the two lines of the Euler-Lagrange system.
    """
    if mesh.is_empty:
        return ResidualReport(0.0, 0.0)
    cf = curvatures(mesh)
    interior = ~mesh.boundary_vertices
    if mesh.boundary_vertices.any() and interior.any():
        bnd = np.flatnonzero(mesh.boundary_vertices)
        e = mesh._directed_edges
        touches = np.zeros(len(mesh.vertices), dtype=bool)
        mask_b = np.zeros(len(mesh.vertices), dtype=bool)
        mask_b[bnd] = True
        touches[e[mask_b[e[:, 1]], 0]] = True
        touches[e[mask_b[e[:, 0]], 1]] = True
        deep = interior & ~touches
        sel = deep if deep.any() else interior
    else:
        sel = interior
    h_res = float(np.abs(cf.mean[sel] - params.c).max()) if sel.any() else 0.0
    if mesh.wall_vertices.any():
        cd = contact_angles(mesh, domain)
        cosang = np.einsum("ij,ij->i", cd.normals, cd.eta_bar)
        a_res = float(np.abs(cosang - params.cos_theta).max())
    else:
        a_res = 0.0

    scans = []
    classes = []
    monotone = True
    if probe_points is not None and len(probe_points):
        h = mesh.max_edge_length()
        diam = np.ptp(mesh.vertices, axis=0).max() if len(mesh.vertices) else 1.0
        frames_ii = []
        for p in probe_points:
            p = np.asarray(p, dtype=float)
            rhos = np.linspace(max(2 * h, 1e-3), 0.3 * max(diam, 4 * h), 12)
            ratios = []
            for rho in rhos:
                a = _area_in_ball(mesh, p, rho)
                wdisk = _wetted_in_disk(mesh, domain, p, rho)
                ratios.append((a + params.cos_theta * wdisk) / (np.pi * rho * rho))
            scans.append(list(zip(rhos.tolist(), ratios)))
            from .ambient import project_and_frame

            fr = project_and_frame(domain, p)
            max_ii = float(np.abs(fr.second_fundamental).max())
            delta = 4.0 * (abs(params.c) + max_ii)
            wgt = np.exp(delta * rhos**monotonicity_alpha) * np.array(ratios)
            # slack covers the clipping-quadrature noise of the area scans
            if np.any(np.diff(wgt) < -5e-4 * max(1.0, np.abs(wgt).max())):
                monotone = False
            # rho -> 0 extrapolation: linear fit on the smallest grid points
            k = 5
            coef = np.polyfit(rhos[:k], np.array(ratios)[:k], 1)
            val = float(np.polyval(coef, 0.0))
            table = density_class_values(params.theta)
            name = min(table, key=lambda nm: abs(table[nm] - val))
            classes.append((name, val))
    return ResidualReport(
        max_mean_curvature_residual=h_res,
        max_angle_residual=a_res,
        density_scan=scans,
        monotone=monotone,
        boundary_density_class=classes,
    )
