"""Pure numpy implementations of the hot loops.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference the extension is tested against.  Function signatures match
``_kernels.pyx`` exactly.
"""

import numpy as np

COND_EXP = 0
COND_RAT = 1


def _conductance(diff, kappa, cond):
    with np.errstate(over="ignore"):
        r = diff / kappa
        r *= r
    if cond == COND_EXP:
        return np.exp(-r)
    return 1.0 / (1.0 + r)


def pm_diffuse(u, iterations, kappa, dt, cond):
    """Explicit Perona-Malik steps with zero flux through the border."""
    u = np.array(u, dtype=np.float64, order="C", copy=True)
    h, w = u.shape
    flux_x = np.zeros((h, w + 1))
    flux_y = np.zeros((h + 1, w))
    for _ in range(iterations):
        dx = u[:, 1:] - u[:, :-1]
        dy = u[1:, :] - u[:-1, :]
        flux_x[:, 1:-1] = _conductance(np.abs(dx), kappa, cond) * dx
        flux_y[1:-1, :] = _conductance(np.abs(dy), kappa, cond) * dy
        # east - west + south - north, same association as the C kernel
        u = u + dt * ((flux_x[:, 1:] - flux_x[:, :-1]) + (flux_y[1:, :] - flux_y[:-1, :]))
    return u


def glcm_counts(codes, levels, dx, dy):
    """Directed co-occurrence counts of (I(x, y), I(x + dx, y + dy))."""
    codes = np.asarray(codes, dtype=np.intp)
    h, w = codes.shape
    ys = slice(max(0, -dy), h - max(0, dy))
    xs = slice(max(0, -dx), w - max(0, dx))
    yt = slice(max(0, dy), h + min(0, dy))
    xt = slice(max(0, dx), w + min(0, dx))
    base = codes[ys, xs]
    other = codes[yt, xt]
    flat = np.bincount((base * levels + other).ravel(), minlength=levels * levels)
    return flat.reshape(levels, levels).astype(np.int64)


def _entropy_from_counts(counts, n):
    c = counts[counts > 0].astype(np.float64)
    return float(np.log2(n) - np.sum(c * np.log2(c)) / n)


def patch_mi(patches, bins):
    """Pairwise MI and first-argument entropy for equally sized patches.

    Each unordered pair is quantized over its joint [min, max] into ``bins``
    codes.  Returns (mi, h_first), both (k, k), with h_first[i, j] the entropy
    of patch i under the quantization of pair (i, j).
    """
    patches = np.asarray(patches, dtype=np.float64)
    k, m = patches.shape
    mi = np.zeros((k, k))
    h_first = np.zeros((k, k))
    mins = patches.min(axis=1)
    maxs = patches.max(axis=1)
    for i in range(k):
        for j in range(i, k):
            lo = min(mins[i], mins[j])
            hi = max(maxs[i], maxs[j])
            span = hi - lo
            if span > 0:
                qi = np.floor((patches[i] - lo) * bins / span)
                qj = np.floor((patches[j] - lo) * bins / span)
                qi = np.minimum(qi, bins - 1).astype(np.intp)
                qj = np.minimum(qj, bins - 1).astype(np.intp)
            else:
                qi = np.zeros(m, dtype=np.intp)
                qj = qi
            hi_ = _entropy_from_counts(np.bincount(qi, minlength=bins), m)
            if i == j:
                mi[i, i] = h_first[i, i] = hi_
                continue
            hj_ = _entropy_from_counts(np.bincount(qj, minlength=bins), m)
            hij = _entropy_from_counts(np.bincount(qi * bins + qj), m)
            value = max(hi_ + hj_ - hij, 0.0)
            mi[i, j] = mi[j, i] = value
            h_first[i, j] = hi_
            h_first[j, i] = hj_
    return mi, h_first
