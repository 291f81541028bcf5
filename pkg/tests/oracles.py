"""Slow reference implementations used to cross-check the package.

Everything here is written the dumbest possible way: dense loops,
all-pairs distances, closed-form algebra. None of it shares code with
the package internals, so agreement is meaningful evidence.
"""

from __future__ import annotations

import numpy as np


def reflect_index(j: int, n: int) -> int:
    """Mirror index j into [0, n) without repeating the edge sample."""
    if n == 1:
        return 0
    period = 2 * n - 2
    m = abs(j) % period
    if m >= n:
        m = period - m
    return m


def dense_convolve(img: np.ndarray, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
    """O(H*W*K^2) true 2-D convolution with mirrored borders."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    ry = (ky.size - 1) // 2
    rx = (kx.size - 1) // 2
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(-ry, ry + 1):
                yy = reflect_index(y - dy, h)
                for dx in range(-rx, rx + 1):
                    xx = reflect_index(x - dx, w)
                    acc += ky[dy + ry] * kx[dx + rx] * img[yy, xx]
            out[y, x] = acc
    return out


def brute_hausdorff(a: np.ndarray, b: np.ndarray, percentile: float = 100.0) -> float:
    """All-pairs nearest-neighbour statistic over both directions."""
    pa = np.argwhere(np.asarray(a, dtype=bool))
    pb = np.argwhere(np.asarray(b, dtype=bool))
    d2 = (
        (pa[:, None, 0] - pb[None, :, 0]) ** 2
        + (pa[:, None, 1] - pb[None, :, 1]) ** 2
    )
    fwd = np.sqrt(d2.min(axis=1).astype(np.float64))
    bwd = np.sqrt(d2.min(axis=0).astype(np.float64))
    pooled = np.concatenate([fwd, bwd])
    if percentile >= 100.0:
        return float(pooled.max())
    return float(np.percentile(pooled, percentile))


def charpoly_eigs(ixx: float, ixy: float, iyy: float) -> tuple[float, float]:
    """Symmetric 2x2 eigenvalues from the characteristic polynomial.

    Returned ordered by magnitude, |first| <= |second|; on magnitude
    ties the first is the algebraically smaller root.
    """
    tr = ixx + iyy
    det = ixx * iyy - ixy * ixy
    disc = max(tr * tr / 4.0 - det, 0.0)
    root = np.sqrt(disc)
    lo = tr / 2.0 - root
    hi = tr / 2.0 + root
    if abs(hi) >= abs(lo):
        return lo, hi
    return hi, lo


def count_dice(pred: np.ndarray, gt: np.ndarray) -> float:
    p = np.asarray(pred, dtype=bool)
    g = np.asarray(gt, dtype=bool)
    inter = int((p & g).sum())
    total = int(p.sum()) + int(g.sum())
    if total == 0:
        return 1.0
    return 2.0 * inter / total


def count_precision_recall(pred: np.ndarray, gt: np.ndarray) -> tuple[float, float]:
    p = np.asarray(pred, dtype=bool)
    g = np.asarray(gt, dtype=bool)
    tp = int((p & g).sum())
    fp = int((p & ~g).sum())
    fn = int((~p & g).sum())
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    return precision, recall


def neighbour_counts(skel: np.ndarray) -> np.ndarray:
    """Number of 8-neighbours of each pixel inside the skeleton."""
    s = np.asarray(skel, dtype=bool)
    p = np.pad(s.astype(np.int64), 1)
    total = np.zeros_like(p[1:-1, 1:-1])
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            total += p[1 + dy : p.shape[0] - 1 + dy, 1 + dx : p.shape[1] - 1 + dx]
    return total


def crossing_number(skel: np.ndarray) -> np.ndarray:
    """0->1 transitions around each pixel in the usual clockwise order."""
    s = np.asarray(skel, dtype=np.uint8)
    p = np.pad(s, 1)
    n = p[:-2, 1:-1]
    ne = p[:-2, 2:]
    e = p[1:-1, 2:]
    se = p[2:, 2:]
    so = p[2:, 1:-1]
    sw = p[2:, :-2]
    w = p[1:-1, :-2]
    nw = p[:-2, :-2]
    cycle = [n, ne, e, se, so, sw, w, nw, n]
    out = np.zeros(s.shape, dtype=np.int64)
    for i in range(8):
        out += ((cycle[i] == 0) & (cycle[i + 1] == 1)).astype(np.int64)
    return out


def skeleton_summary(skel: np.ndarray) -> tuple[int, int]:
    """(endpoint count, branch-point count) of a thinned mask.

    Endpoints have exactly one neighbour; branch points have crossing
    number >= 3, which is robust to the two-pixel staircases thinning
    leaves on diagonals (a plain neighbour count is not).
    """
    s = np.asarray(skel, dtype=bool)
    nb = neighbour_counts(s)
    cn = crossing_number(s)
    endpoints = int((s & (nb == 1)).sum())
    branches = int((s & (cn >= 3)).sum())
    return endpoints, branches


def axis_run_lengths(mask: np.ndarray) -> np.ndarray:
    """Per-pixel min of the horizontal and vertical solid run lengths.

    A straight tube of nominal width w gives w on every centerline
    pixel regardless of its angle (diagonal tubes still cut 3-px rows),
    which makes it a usable thickness probe where the Euclidean
    distance transform is not (EDT dips to sqrt(2) on diagonals).
    """
    m = np.asarray(mask, dtype=bool)
    out = np.full(m.shape, np.iinfo(np.int64).max, dtype=np.int64)
    for axis in (0, 1):
        a = m if axis == 0 else m.T
        runs = np.zeros(a.shape, dtype=np.int64)
        for i in range(a.shape[0]):
            row = a[i]
            j = 0
            while j < a.shape[1]:
                if row[j]:
                    k = j
                    while k < a.shape[1] and row[k]:
                        k += 1
                    runs[i, j:k] = k - j
                    j = k
                else:
                    j += 1
        out = np.minimum(out, runs if axis == 0 else runs.T)
    out[~m] = 0
    return out


def measured_tube_width(mask: np.ndarray, skeleton: np.ndarray) -> float:
    """Median cross-section thickness sampled along the skeleton."""
    runs = axis_run_lengths(mask)
    vals = runs[np.asarray(skeleton, dtype=bool)]
    return float(np.median(vals))
