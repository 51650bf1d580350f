"""Multi-orientation interface stencil for the discrete perimeter.

A Crofton-style estimator: the interior interface area of an occupancy field
is the weighted count of occupancy jumps across 37 half-set lattice offsets
(five symmetry classes, up to range 2).  The weights below minimize the
worst-case error over flat interfaces of all orientations (computed by linear
programming against a 200k-point Fibonacci sphere of normals); residual
anisotropy is +-1.4% for planes and well under 1% averaged over spheres.
"""

from __future__ import annotations

from itertools import permutations, product

import numpy as np

CLASS_WEIGHTS = np.array([
    0.041619499627,  # axis        (1,0,0) x 3
    0.012653021065,  # face diag   (1,1,0) x 6
    0.005851509437,  # body diag   (1,1,1) x 4
    0.027700545230,  # knight      (2,1,0) x 12
    0.033613366854,  # far corner  (2,1,1) x 12
])

_GENERATORS = [(1, 0, 0), (1, 1, 0), (1, 1, 1), (2, 1, 0), (2, 1, 1)]


def _half_set(gen):
    out = set()
    for s in product((1, -1), repeat=3):
        w = tuple(a * b for a, b in zip(gen, s))
        for p in permutations(range(3)):
            q = tuple(w[k] for k in p)
            if q > tuple(-x for x in q):
                out.add(q)
    return sorted(out)


def build_stencil():
    """(offsets (37, 3) int32, per-offset weights (37,) float64)."""
    offsets = []
    weights = []
    for gen, w in zip(_GENERATORS, CLASS_WEIGHTS):
        for off in _half_set(gen):
            offsets.append(off)
            weights.append(w)
    return np.array(offsets, dtype=np.int32), np.array(weights, dtype=np.float64)


OFFSETS, WEIGHTS = build_stencil()


def flat_response(normals) -> np.ndarray:
    """Estimator response on flat interfaces with the given unit normals."""
    n = np.atleast_2d(np.asarray(normals, dtype=float))
    return np.abs(n @ OFFSETS.T.astype(float)) @ WEIGHTS
