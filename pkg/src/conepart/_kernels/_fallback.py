"""Pure-numpy implementations of the hot kernels.

Semantics match the compiled core: scores are dot products of (x - shift)
with each row of `dirs`; hard assignment takes the first maximal score
(lowest index wins ties); soft assignment is a softmax over normalized
scores. Per-cone sums use full-array pairwise reduction so results are
stable under point reordering to well below 1e-12.
"""

import numpy as np

# chunk so a 10^6-point cloud never materializes an (N, 2d) score block > ~10 MB
_CHUNK = 65536


def hard_labels(pts, dirs, shift):
    """Flat cone label per point: argmax_j <x - shift, dirs[j]>, first max wins."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    n = pts.shape[0]
    labels = np.empty(n, dtype=np.int64)
    offset = shift @ dirs.T
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        scores = pts[lo:hi] @ dirs.T - offset
        labels[lo:hi] = np.argmax(scores, axis=1)
    return labels


def hard_masses(pts, wts, dirs, shift):
    """Per-cone weight totals under hard assignment."""
    wts = np.asarray(wts, dtype=np.float64)
    labels = hard_labels(pts, dirs, shift)
    m = dirs.shape[0]
    out = np.empty(m, dtype=np.float64)
    for j in range(m):
        out[j] = np.sum(wts[labels == j])
    return out


def soft_masses(pts, wts, dirs, shift, beta):
    """Per-cone weight totals under softmax(beta * <y/|y|, dirs>) assignment."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    wts = np.asarray(wts, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    n, m = pts.shape[0], dirs.shape[0]
    partials = []
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        y = pts[lo:hi] - shift
        r = np.linalg.norm(y, axis=1)
        ok = r > 0.0
        scores = np.zeros((hi - lo, m))
        scores[ok] = (y[ok] / r[ok, None]) @ dirs.T
        scores *= beta
        scores -= scores.max(axis=1, keepdims=True)
        p = np.exp(scores)
        p /= p.sum(axis=1, keepdims=True)
        partials.append(wts[lo:hi] @ p)
    return np.sum(partials, axis=0)
