"""Pure-NumPy fallback for the compiled voxel kernels (same contracts)."""

from __future__ import annotations

import numpy as np


def _pair_slices(shape, off):
    s1 = tuple(slice(max(0, -o), shape[k] - max(0, o)) for k, o in enumerate(off))
    s2 = tuple(slice(max(0, o), shape[k] - max(0, -o)) for k, o in enumerate(off))
    return s1, s2


def pair_energy(occ, mask, offsets, weights):
    m = mask.astype(bool)
    total = 0.0
    for off, w in zip(offsets, weights):
        s1, s2 = _pair_slices(occ.shape, off)
        both = m[s1] & m[s2]
        if both.any():
            total += w * np.abs(occ[s1][both] - occ[s2][both]).sum()
    return float(total)


def tv_gradient(occ, mask, offsets, weights, eps, out):
    m = mask.astype(bool)
    out[...] = 0.0
    e2 = eps * eps
    for off, w in zip(offsets, weights):
        s1, s2 = _pair_slices(occ.shape, off)
        both = m[s1] & m[s2]
        d = occ[s1] - occ[s2]
        r = np.where(both, w * d / np.sqrt(d * d + e2), 0.0)
        out[s1] += r
        out[s2] -= r


def flip_delta(occ, mask, offsets, weights, ci, cj, ck):
    shape = occ.shape
    me = occ[ci, cj, ck]
    flipped = 1.0 - me
    before = after = 0.0
    for off, w in zip(offsets, weights):
        for sgn in (1, -1):
            i0, j0, k0 = ci + sgn * off[0], cj + sgn * off[1], ck + sgn * off[2]
            if not (0 <= i0 < shape[0] and 0 <= j0 < shape[1] and 0 <= k0 < shape[2]):
                continue
            if mask[i0, j0, k0]:
                other = occ[i0, j0, k0]
                before += w * abs(me - other)
                after += w * abs(flipped - other)
    return float(after - before)
