"""numba inner loops for path generation.

Bit ``i`` of the word stream (word ``i >> 6``, least significant bit first)
is step ``i`` of a simple random walk: 1 means +1, 0 means -1.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def walk_extent(words, n):
    pos = 0
    lo = 0
    hi = 0
    for i in range(n):
        if (words[i >> 6] >> np.uint64(i & 63)) & np.uint64(1):
            pos += 1
            if pos > hi:
                hi = pos
        else:
            pos -= 1
            if pos < lo:
                lo = pos
    return lo, hi


@nb.njit(cache=True)
def walk_counts(words, n, lo, hi):
    # site visits at times 1..n; the starting point S_0 = 0 is not counted
    counts = np.zeros(hi - lo + 1, np.int64)
    pos = -lo
    for i in range(n):
        if (words[i >> 6] >> np.uint64(i & 63)) & np.uint64(1):
            pos += 1
        else:
            pos -= 1
        counts[pos] += 1
    return counts


@nb.njit(cache=True)
def bin_increments(z, sd, w, inv_width):
    """Advance a Brownian path by ``sd * z`` and return the bin index of
    each new position (bins of unit width in ``x * inv_width``, centred on
    the integers) together with the final position."""
    idx = np.empty(z.shape[0], np.int64)
    for i in range(z.shape[0]):
        w += sd * z[i]
        idx[i] = np.int64(np.floor(w * inv_width + 0.5))
    return idx, w


@nb.njit(cache=True)
def _order_product(pts, perm, m, s):
    prod = 1.0
    prev = 0.0
    for j in range(m):
        x = pts[perm[j]]
        prod *= np.exp(-s * abs(x - prev)) / s
        prev = x
    return prod


@nb.njit(cache=True)
def kac_weight(pts, s):
    """Sum over visiting orders of products of potential densities,
    enumerated with Heap's algorithm."""
    m = pts.shape[0]
    perm = np.arange(m)
    c = np.zeros(m, np.int64)
    total = _order_product(pts, perm, m, s)
    i = 1
    while i < m:
        if c[i] < i:
            if i % 2 == 0:
                perm[0], perm[i] = perm[i], perm[0]
            else:
                perm[c[i]], perm[i] = perm[i], perm[c[i]]
            total += _order_product(pts, perm, m, s)
            c[i] += 1
            i = 1
        else:
            c[i] = 0
            i += 1
    return total


N_EXTRA = 5  # region, decay, root1, root2, mode


@nb.cfunc(nb.types.double(nb.types.intc, nb.types.CPointer(nb.types.double)), cache=True)
def kac_region_integrand(nargs, xx):
    """Mapped Kac integrand for one ordering region.

    ``xx`` holds the mapped gap variables v followed by the origin rank r,
    the gap decay rate, the two kernel roots and the mode (0: product of two
    motions' Kac sums at points x_1..x_d; 1: one motion at x1, x1, x2, x2).
    """
    d = nargs - N_EXTRA
    r = int(xx[d])
    decay = xx[d + 1]
    s1 = xx[d + 2]
    s2 = xx[d + 3]
    mode = int(xx[d + 4])
    pos = np.zeros(d + 1)
    jac = 1.0
    for i in range(r + 1, d + 1):
        v = xx[i - 1]
        pos[i] = pos[i - 1] - np.log1p(-v) / decay
    for i in range(r - 1, -1, -1):
        v = xx[i]
        pos[i] = pos[i + 1] + np.log1p(-v) / decay
    for i in range(d):
        jac /= decay * (1.0 - xx[i])
    pts = np.empty(d)
    k = 0
    for i in range(d + 1):
        if i != r:
            pts[k] = pos[i]
            k += 1
    if mode == 0:
        return kac_weight(pts, s1) * kac_weight(pts, s2) * jac
    quad = np.empty(2 * d)
    for i in range(d):
        quad[2 * i] = pts[i]
        quad[2 * i + 1] = pts[i]
    return kac_weight(quad, s1) * jac
