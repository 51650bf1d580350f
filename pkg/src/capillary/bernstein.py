"""Numerical side of the stable-Bernstein machinery.

Closed-form constants for the Schoen-Simon-Yau style curvature estimate, the
admissible contact-angle windows in dimensions 2..5, and discrete residual
checks of the test-function identities on capillary minimal meshes in the
half-space:

    phi = 1 - w cos(theta),  w = <e_in, nu>,
    Delta phi + |A|^2 phi = |A|^2,       interior,
    d phi / d eta = Q phi,               wall boundary,

with e_in the inward wall normal.  The normal nu is oriented so that w > 0 on
the contact line (w = cos theta there); with that orientation and the outward
conormal eta the Robin coefficient is Q = +cot(theta) A(eta, eta) and the
boundary curvature identity reads

    d|A|^2/d eta = 2 cot(theta) (2 |A|^2 A(eta,eta) - sum_j lambda_j^3),

both verified in closed form on catenoid bands.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ambient import AmbientDomain, HALFSPACE
from .energy import EnergyParams
from .errors import NotMinimal, NoWitness
from .mesh import CapillaryMesh, contact_angles, curvatures, scatter_rows


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SSYInput:
    n: int
    theta: float
    q: float = 0.0
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.n not in (2, 3, 4, 5):
            raise ValueError("dimension n must be one of 2..5")
        if np.sin(self.theta) <= 0:
            raise ValueError("need sin(theta) > 0")
        if self.q < 0 or self.a <= 0 or self.b <= 0:
            raise ValueError("need q >= 0 and a, b > 0")


@dataclass(frozen=True)
class SSYConstants:
    c_theta: float      # (1 + |cos|)^3 / sin^2
    c_n_theta: float    # 3 sqrt(n-1) |cos| / sin^2
    b_value: float      # the curvature-estimate coefficient B_{q,a,b}


def c_theta_cubed_form(theta: float) -> float:
    u = abs(np.cos(theta))
    return (1.0 + u) ** 3 / np.sin(theta) ** 2


def c_theta_ratio_form(theta: float) -> float:
    u = abs(np.cos(theta))
    # 1 - |cos t| = 2 sin^2(t'/2) with t' folded into (0, pi/2]: stable near 0
    fold = min(theta, np.pi - theta)
    return (1.0 + u) ** 2 / (2.0 * np.sin(fold / 2.0) ** 2)


def constants(inp: SSYInput) -> SSYConstants:
    """Literal evaluation of the three printed constants."""
    C = c_theta_cubed_form(inp.theta)
    c = 3.0 * np.sqrt(inp.n - 1.0) * abs(np.cos(inp.theta)) / np.sin(inp.theta) ** 2
    B = _b_formula(inp.n, inp.q, inp.a, inp.b, c, C)
    return SSYConstants(C, c, B)


def _b_formula(n, q, a, b, c, C):
    half = (3 + 2 * q) / 2
    return (Fraction(2, n) if isinstance(C, Fraction) else 2.0 / n) + 1 + 2 * q \
        - half * b * c - (1 + a * c + half * c / b) * (1 + q) ** 2 * C


def constants_exact(n: int, cos_abs: Fraction, sin_sq: Fraction,
                    q: Fraction = Fraction(0), a: Fraction = Fraction(1),
                    b: Fraction = Fraction(1)):
    """Rational-arithmetic constants for angles with rational cos/sin^2.

    Only usable when both |cos(theta)| and sin^2(theta) are rational and
    3 sqrt(n-1) |cos| is rational (e.g. theta = pi/2, any n).  Returns
    (C_theta, c_{n,theta}, B) as Fractions.
    """
    C = (1 + cos_abs) ** 3 / sin_sq
    if cos_abs == 0:
        c = Fraction(0)
    else:
        root = {1: Fraction(1), 4: Fraction(2), 9: Fraction(3)}.get(n - 1)
        if root is None:
            raise ValueError("sqrt(n-1) irrational; exact path needs cos(theta) = 0")
        c = 3 * root * cos_abs / sin_sq
    return C, c, _b_formula(n, q, a, b, c, C)


_RANGE_QUADRATICS = {
    # B-positivity conditions with a = b = 1: const + lin*C - quad*C^2 > 0
    3: (5.0 / 3.0 + 3.0 * np.sqrt(2.0) / 2.0, np.sqrt(2.0) - 1.0, 5.0 * np.sqrt(2.0) / 2.0),
    4: (3.0 / 2.0 + 3.0 * np.sqrt(3.0) / 2.0, np.sqrt(3.0) - 1.0, 5.0 * np.sqrt(3.0) / 2.0),
    5: (32.0 / 5.0, 29.0 / 4.0, 27.0 / 2.0),
}


def c_theta_threshold(n: int) -> float:
    """Positive root of the printed quadratic condition in C_theta."""
    const, lin, quad = _RANGE_QUADRATICS[n]
    return (lin + np.sqrt(lin * lin + 4.0 * quad * const)) / (2.0 * quad)


@dataclass(frozen=True)
class AdmissibleRange:
    theta_interval: tuple[float, float]
    witness_q: float
    witness_a: float
    witness_b: float
    witness_p: float
    c_threshold: float | None = None


def _witness_scan(n: int, theta: float) -> tuple[float, float, float, float]:
    need_q = max(0.0, (n / 2.0 - 2.0))  # 2p = 2(2+q) > n
    for a, b in [(1.0, 1.0)] + [(a, b) for a in (0.25, 0.5, 1, 2, 4)
                                for b in (0.25, 0.5, 1, 2, 4)]:
        for k in range(0, 201):
            q = 0.01 * k
            if 2 * (2 + q) <= n:
                continue
            if constants(SSYInput(n, theta, q, a, b)).b_value > 0:
                return q, a, b, 2.0 + q
    raise NoWitness(f"no positive B with 2p > n found for n={n} (scan exhausted)")


def admissible_range(n: int) -> AdmissibleRange:
    """Contact-angle window of the stable-Bernstein theorem in dimension n."""
    if n == 2:
        q, a, b, p = _witness_scan(2, np.pi / 2)
        return AdmissibleRange((0.0, np.pi), q, a, b, p)
    cstar = c_theta_threshold(n)
    if cstar <= 1.0:
        raise NoWitness(f"quadratic threshold {cstar} below the minimum of C_theta")
    lo, hi = 1e-9, np.pi / 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if c_theta_cubed_form(mid) > cstar:
            lo = mid
        else:
            hi = mid
    theta_star = 0.5 * (lo + hi)
    q, a, b, p = _witness_scan(n, np.pi / 2)
    return AdmissibleRange((theta_star, np.pi - theta_star), q, a, b, p,
                           c_threshold=cstar)


# ---------------------------------------------------------------------------
# discrete identity checks
# ---------------------------------------------------------------------------


@dataclass
class IdentityReport:
    pde_residual_l2: float
    robin_residual_l2: float
    curv_identity_residual_l2: float
    curv_bound_satisfied: bool
    trace_lhs: float
    trace_rhs: float
    almost_stab_lhs: float
    almost_stab_rhs: float
    w_boundary_mean: float


def _surface_gradient(mesh: CapillaryMesh, f: np.ndarray) -> np.ndarray:
    """P1 gradient per triangle, area-averaged onto vertices."""
    v, t = mesh.vertices, mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    cr = np.cross(b - a, c - a)
    area2 = np.linalg.norm(cr, axis=1)
    nhat = cr / np.maximum(area2, 1e-300)[:, None]
    g0 = np.cross(nhat, c - b)
    g1 = np.cross(nhat, a - c)
    g2 = np.cross(nhat, b - a)
    gt = (f[t[:, 0], None] * g0 + f[t[:, 1], None] * g1 + f[t[:, 2], None] * g2) \
        / np.maximum(area2, 1e-300)[:, None]
    n = len(v)
    w = 0.5 * area2
    num = np.zeros((n, 3))
    den = np.zeros(n)
    for k in range(3):
        num += scatter_rows(t[:, k], w[:, None] * gt, n)
        den += np.bincount(t[:, k], weights=w, minlength=n)
    return num / np.maximum(den, 1e-300)[:, None]


def _laplacian(mesh: CapillaryMesh, f: np.ndarray) -> np.ndarray:
    from .stability import _cot_stiffness

    K = _cot_stiffness(mesh)
    va = mesh.vertex_areas()
    return -(K @ f) / np.maximum(va, 1e-300)


def _boundary_normal_derivative(mesh: CapillaryMesh, field: np.ndarray,
                                vertex: int, eta: np.ndarray, t_hat: np.ndarray,
                                two_ring_interior: np.ndarray) -> float:
    """d(field)/d(eta) at a boundary vertex by an affine fit over interior
    2-ring samples (whose field values carry no one-sided-star bias)."""
    pts = two_ring_interior
    rel = mesh.vertices[pts] - mesh.vertices[vertex]
    s = rel @ eta
    q = rel @ t_hat
    cols = np.column_stack([np.ones(len(pts)), s, q])
    sol, *_ = np.linalg.lstsq(cols, field[pts], rcond=None)
    return float(sol[1])


def bump_field(mesh: CapillaryMesh, margin: float = 0.25) -> np.ndarray:
    """Smooth nonnegative field vanishing near rim vertices (compact support)."""
    v = mesh.vertices
    if mesh.rim_vertices.any():
        rim_pts = v[mesh.rim_vertices]
        d = np.min(np.linalg.norm(v[:, None, :] - rim_pts[None, :, :], axis=2), axis=1)
        cut = margin * np.ptp(v, axis=0).max()
        x = np.clip(d / max(cut, 1e-12), 0.0, 1.0)
        return x * x * (3 - 2 * x)
    return np.ones(len(v))


def identity_checks(mesh: CapillaryMesh, domain: AmbientDomain, params: EnergyParams,
                    f: np.ndarray | None = None, h_tol: float = 0.05) -> IdentityReport:
    """Residuals of the Bernstein test-function identities on a minimal mesh."""
    if domain.kind != HALFSPACE:
        raise ValueError("identity checks are formulated in the half-space")
    if abs(params.c) > 1e-12:
        raise ValueError("identity checks require c = 0 (minimal surface)")
    cf = curvatures(mesh)
    interior = ~mesh.boundary_vertices
    if interior.any() and np.abs(cf.mean[interior]).max() >= h_tol:
        raise NotMinimal(
            f"max interior |H| = {np.abs(cf.mean[interior]).max():.4f} >= {h_tol}")

    e_in = np.array([0.0, 0.0, 1.0])
    # quadric-refined normals: O(h^2) even at one-sided boundary stars, so
    # the boundary values of w (and hence phi) do not pollute d/d eta
    w = cf.normals_refined @ e_in
    cd = contact_angles(mesh, domain)
    sign = 1.0
    if len(cd.indices) and np.mean(w[cd.indices]) < 0:
        sign = -1.0
    w = sign * w
    lam1, lam2 = sign * cf.lambda1, sign * cf.lambda2
    cos_t = params.cos_theta
    cot_t = cos_t / np.sin(params.theta)
    phi = 1.0 - w * cos_t

    va = mesh.vertex_areas()
    total_sq = cf.total_sq
    pde = _laplacian(mesh, phi) + total_sq * phi - total_sq
    support = bump_field(mesh)
    # strong-form residual where the pointwise Laplacian stencil is consistent:
    # one ring away from every boundary
    e = mesh._directed_edges
    near_bnd = mesh.boundary_vertices.copy()
    near_bnd[e[mesh.boundary_vertices[e[:, 1]], 0]] = True
    near_bnd[e[mesh.boundary_vertices[e[:, 0]], 1]] = True
    wint = va * (support > 0.97) * interior * ~near_bnd
    pde_l2 = float(np.sqrt(np.sum(wint * pde**2) / max(np.sum(wint), 1e-300)))

    # boundary quantities
    idx = cd.indices
    blen = np.zeros(len(mesh.vertices))
    for loop in mesh.boundary_loops:
        if mesh.rim_vertices[loop].any():
            continue
        pts = mesh.vertices[loop]
        seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        for j, vtx in enumerate(loop):
            blen[vtx] += 0.5 * (seg[j] + seg[j - 1])
    adj = mesh.adjacency()

    def interior_two_ring(v):
        ring = set(adj[v].tolist())
        for u in adj[v]:
            ring.update(adj[u].tolist())
        ring.discard(v)
        return np.array([u for u in ring if not mesh.boundary_vertices[u]],
                        dtype=np.int64)

    robin_sq = 0.0
    curv_sq = 0.0
    wsum = 0.0
    bound_ok = True
    n_dim = 2
    bound_const = 6.0 * np.sqrt(n_dim - 1.0) * abs(cot_t)
    for row, vtx in enumerate(idx):
        eta = cd.eta[row]
        t_hat = np.cross(cd.normals[row], eta)
        a_eta = sign * cf.shape_along(int(vtx), eta)
        nbrs = interior_two_ring(int(vtx))
        if len(nbrs) < 4:
            continue
        dphi = _boundary_normal_derivative(mesh, phi, int(vtx), eta, t_hat, nbrs)
        q_rob = cot_t * a_eta
        r1 = dphi - q_rob * phi[vtx]
        da2 = _boundary_normal_derivative(mesh, total_sq, int(vtx), eta, t_hat, nbrs)
        lhs = da2
        rhs = 2.0 * cot_t * (2.0 * total_sq[vtx] * a_eta - (lam1[vtx] ** 3 + lam2[vtx] ** 3))
        r2 = lhs - rhs
        wb = blen[vtx]
        robin_sq += wb * r1 * r1
        curv_sq += wb * r2 * r2
        wsum += wb
        amax = bound_const * (np.sqrt(total_sq[vtx])) ** 3
        if abs(da2) > amax + 1e-9:
            bound_ok = False
    robin_l2 = float(np.sqrt(robin_sq / max(wsum, 1e-300)))
    curv_l2 = float(np.sqrt(curv_sq / max(wsum, 1e-300)))

    # trace inequality and almost-stability with a compactly supported field
    u = support if f is None else np.asarray(f, dtype=float)
    grad_u = _surface_gradient(mesh, np.abs(u))
    trace_lhs = float(np.sum(blen * np.abs(u)))
    trace_rhs = float(np.sum(va * (np.linalg.norm(grad_u, axis=1)
                                   + np.abs(cf.mean) * np.abs(u))) / np.sin(params.theta))
    stab_lhs = float(np.sum(va * total_sq * u**2))
    stab_rhs = float(c_theta_ratio_form(params.theta)
                     * np.sum(va * np.linalg.norm(_surface_gradient(mesh, u), axis=1) ** 2))
    wb_mean = float(np.mean(w[idx])) if len(idx) else np.nan
    return IdentityReport(
        pde_residual_l2=pde_l2,
        robin_residual_l2=robin_l2,
        curv_identity_residual_l2=curv_l2,
        curv_bound_satisfied=bound_ok,
        trace_lhs=trace_lhs,
        trace_rhs=trace_rhs,
        almost_stab_lhs=stab_lhs,
        almost_stab_rhs=stab_rhs,
        w_boundary_mean=wb_mean,
    )
