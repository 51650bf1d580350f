# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels for the voxel-region machinery.

Same contracts as capillary._kernels_np; selected at import by capillary._core.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def pair_energy(double[:, :, ::1] occ, unsigned char[:, :, ::1] mask,
                int[:, ::1] offsets, double[::1] weights):
    """Weighted occupancy-jump sum over mask-interior cell pairs."""
    cdef Py_ssize_t nx = occ.shape[0], ny = occ.shape[1], nz = occ.shape[2]
    cdef Py_ssize_t i, j, k, q
    cdef int ox, oy, oz
    cdef Py_ssize_t i0, j0, k0
    cdef double total = 0.0, w
    cdef double sub
    for q in range(offsets.shape[0]):
        ox = offsets[q, 0]; oy = offsets[q, 1]; oz = offsets[q, 2]
        w = weights[q]
        sub = 0.0
        for i in range(max(0, -ox), nx - max(0, ox)):
            i0 = i + ox
            for j in range(max(0, -oy), ny - max(0, oy)):
                j0 = j + oy
                for k in range(max(0, -oz), nz - max(0, oz)):
                    k0 = k + oz
                    if mask[i, j, k] and mask[i0, j0, k0]:
                        sub += fabs(occ[i, j, k] - occ[i0, j0, k0])
        total += w * sub
    return total


def tv_gradient(double[:, :, ::1] occ, unsigned char[:, :, ::1] mask,
                int[:, ::1] offsets, double[::1] weights, double eps,
                double[:, :, ::1] out):
    """Gradient of sum_q w_q * sqrt(diff^2 + eps^2) over mask-interior pairs."""
    cdef Py_ssize_t nx = occ.shape[0], ny = occ.shape[1], nz = occ.shape[2]
    cdef Py_ssize_t i, j, k, q
    cdef int ox, oy, oz
    cdef Py_ssize_t i0, j0, k0
    cdef double w, d, r, e2 = eps * eps
    out[:, :, :] = 0.0
    for q in range(offsets.shape[0]):
        ox = offsets[q, 0]; oy = offsets[q, 1]; oz = offsets[q, 2]
        w = weights[q]
        for i in range(max(0, -ox), nx - max(0, ox)):
            i0 = i + ox
            for j in range(max(0, -oy), ny - max(0, oy)):
                j0 = j + oy
                for k in range(max(0, -oz), nz - max(0, oz)):
                    k0 = k + oz
                    if mask[i, j, k] and mask[i0, j0, k0]:
                        d = occ[i, j, k] - occ[i0, j0, k0]
                        r = w * d / sqrt(d * d + e2)
                        out[i, j, k] += r
                        out[i0, j0, k0] -= r


def flip_delta(double[:, :, ::1] occ, unsigned char[:, :, ::1] mask,
               int[:, ::1] offsets, double[::1] weights,
               Py_ssize_t ci, Py_ssize_t cj, Py_ssize_t ck):
    """Change of the interior pair energy if binary cell (ci,cj,ck) flips."""
    cdef Py_ssize_t nx = occ.shape[0], ny = occ.shape[1], nz = occ.shape[2]
    cdef Py_ssize_t q, i0, j0, k0
    cdef int ox, oy, oz, sgn
    cdef double before = 0.0, after = 0.0, w, me, other
    me = occ[ci, cj, ck]
    cdef double flipped = 1.0 - me
    for q in range(offsets.shape[0]):
        w = weights[q]
        for sgn in range(2):
            if sgn == 0:
                ox = offsets[q, 0]; oy = offsets[q, 1]; oz = offsets[q, 2]
            else:
                ox = -offsets[q, 0]; oy = -offsets[q, 1]; oz = -offsets[q, 2]
            i0 = ci + ox; j0 = cj + oy; k0 = ck + oz
            if i0 < 0 or i0 >= nx or j0 < 0 or j0 >= ny or k0 < 0 or k0 >= nz:
                continue
            if mask[i0, j0, k0]:
                other = occ[i0, j0, k0]
                before += w * fabs(me - other)
                after += w * fabs(flipped - other)
    return after - before
