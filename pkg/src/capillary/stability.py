"""Capillary Jacobi (second-variation) eigenproblem with Robin boundary data.

For a critical mesh the quadratic form on scalar normal speeds f is

    Q(f) = int |grad f|^2 - |A|^2 f^2  -  oint Q_rob f^2,

assembled with linear elements: cotangent stiffness, lumped |A|^2 potential
and a lumped boundary line integral.  Q_rob = II(nu_bar, nu_bar)/sin(theta)
- cot(theta) * A(eta, eta) with A taken with respect to the mesh normal
(outward of the enclosed region) and II with respect to the outward wall
normal; the ambient is flat so there is no Ricci term.  A mesh is stable when
the spectrum is nonnegative; the Morse index counts eigenvalues below -tol.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .ambient import AmbientDomain, project_and_frame
from .energy import EnergyParams
from .errors import NoConvergence, NotCriticalWarning
from .mesh import CapillaryMesh, contact_angles, curvatures


@dataclass
class JacobiForm:
    stiffness: sp.csr_matrix   # grad-grad minus potential minus Robin boundary term
    mass: np.ndarray           # lumped (diagonal) mass
    robin: np.ndarray          # per-wall-vertex Robin coefficient Q
    wall_indices: np.ndarray
    scale: float               # mesh diameter, for default tolerances

    def rayleigh(self, f: np.ndarray) -> float:
        num = float(f @ (self.stiffness @ f))
        den = float(f @ (self.mass * f))
        return num / den

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.stiffness @ f


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # columns, mass-orthonormal
    morse_index: int
    tol: float


def _cot_stiffness(mesh: CapillaryMesh) -> sp.csr_matrix:
    v, t = mesh.vertices, mesh.triangles
    n = len(v)
    rows, cols, vals = [], [], []
    for k in range(3):
        i = t[:, k]
        j = t[:, (k + 1) % 3]
        o = t[:, (k + 2) % 3]
        u1 = v[i] - v[o]
        u2 = v[j] - v[o]
        cross = np.linalg.norm(np.cross(u1, u2), axis=1)
        cot = np.einsum("ij,ij->i", u1, u2) / np.maximum(cross, 1e-300)
        w = 0.5 * cot
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def jacobi_form(mesh: CapillaryMesh, domain: AmbientDomain, params: EnergyParams,
                check_critical: bool = True) -> JacobiForm:
    """Assemble the second-variation form on per-vertex scalar speeds."""
    cf = curvatures(mesh)
    n = len(mesh.vertices)
    K = _cot_stiffness(mesh)
    mass = mesh.vertex_areas()
    K = K - sp.diags(cf.total_sq * mass)

    wall_idx = np.flatnonzero(mesh.wall_vertices)
    robin = np.zeros(len(wall_idx))
    if len(wall_idx):
        cd = contact_angles(mesh, domain)
        order = {int(v): k for k, v in enumerate(cd.indices)}
        # lumped boundary lengths along wall loops
        blen = np.zeros(n)
        for loop in mesh.boundary_loops:
            if mesh.rim_vertices[loop].any():
                continue
            pts = mesh.vertices[loop]
            seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
            for j, vtx in enumerate(loop):
                blen[vtx] += 0.5 * (seg[j] + seg[j - 1])
        sin_t, cot_t = np.sin(params.theta), np.cos(params.theta) / np.sin(params.theta)
        diag = np.zeros(n)
        for k, vtx in enumerate(wall_idx):
            if int(vtx) not in order:
                continue
            row = order[int(vtx)]
            fr = project_and_frame(domain, mesh.vertices[vtx])
            ii = fr.second_fundamental_along(cd.nu_bar[row])
            a_eta = cf.shape_along(int(vtx), cd.eta[row])
            q = ii / sin_t - cot_t * a_eta
            robin[k] = q
            diag[vtx] = -q * blen[vtx]
        K = K + sp.diags(diag)

    if check_critical:
        from .solver import residuals

        res = residuals(mesh, domain, params)
        if max(res.max_mean_curvature_residual, res.max_angle_residual) > 0.1:
            warnings.warn("mesh residuals exceed 0.1; Jacobi form may be meaningless",
                          NotCriticalWarning)
    K = 0.5 * (K + K.T)
    scale = float(np.ptp(mesh.vertices, axis=0).max())
    return JacobiForm(stiffness=K.tocsr(), mass=mass, robin=robin,
                      wall_indices=wall_idx, scale=max(scale, 1e-12))


def spectrum(form: JacobiForm, k: int = 6, tol: float | None = None,
             volume_constrained: bool = False, maxiter: int = 20000) -> SpectrumReport:
    """k smallest generalized eigenpairs of (stiffness, mass).

    With ``volume_constrained`` the constant-volume subspace {f : int f = 0}
    is enforced by a rank-one penalty shift (translations along the wall stay
    admissible; the dilation mode is projected out).
    """
    if k < 1:
        raise ValueError("need k >= 1")
    n = form.stiffness.shape[0]
    tol = tol if tol is not None else 1e-6 / form.scale**2
    half = 1.0 / np.sqrt(form.mass)
    D = sp.diags(half)
    A = (D @ form.stiffness @ D).tocsr()

    if volume_constrained:
        q = np.sqrt(form.mass)
        q = q / np.linalg.norm(q)
        beta = 10.0 * max(abs(A).sum(axis=1).max(), 1.0)

        def matvec(x):
            return A @ x + beta * q * (q @ x)

        op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
        src = op
    else:
        src = A

    k_eff = min(k, n - 2)
    try:
        if n <= 600:
            dense = A.toarray()
            if volume_constrained:
                q = np.sqrt(form.mass)
                q = q / np.linalg.norm(q)
                beta = 10.0 * max(np.abs(dense).sum(axis=1).max(), 1.0)
                dense = dense + beta * np.outer(q, q)
            w, vecs = np.linalg.eigh(dense)
            w, vecs = w[:k_eff], vecs[:, :k_eff]
        else:
            w, vecs = spla.eigsh(src, k=k_eff, which="SA", maxiter=maxiter,
                                 tol=1e-10)
    except spla.ArpackNoConvergence as exc:  # pragma: no cover
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(w)
    w, vecs = w[order], vecs[:, order]
    funcs = vecs * half[:, None]
    # mass-normalise the eigenfunctions
    for j in range(funcs.shape[1]):
        nrm = np.sqrt(float(funcs[:, j] @ (form.mass * funcs[:, j])))
        funcs[:, j] /= max(nrm, 1e-300)
    morse = int(np.sum(w < -tol))
    return SpectrumReport(eigenvalues=w, eigenfunctions=funcs, morse_index=morse, tol=tol)
