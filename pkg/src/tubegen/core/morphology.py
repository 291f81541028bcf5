"""Binary morphology: disc dilation/erosion, thinning, components.

The structuring element is the Euclidean disc {(dx,dy): dx^2+dy^2 <= r^2},
realized through exact distance transforms, so a radius-1 dilation of a
single pixel is the 5-pixel plus shape.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import InvalidParameterError
from .types import BinaryMask

__all__ = ["dilate", "erode", "mask_edge", "thin", "connected_components"]

_EIGHT = np.ones((3, 3), dtype=np.uint8)


def _radius(radius) -> float:
    r = float(radius)
    if not np.isfinite(r) or r < 0:
        raise InvalidParameterError(f"radius must be >= 0, got {radius!r}")
    return r


def dilate(mask: BinaryMask, radius) -> BinaryMask:
    """Grow the mask by a disc of the given radius; radius 0 is identity."""
    r = _radius(radius)
    m = mask.as_bool()
    if r == 0 or not m.any() or m.all():
        return BinaryMask(m)
    dist = ndimage.distance_transform_edt(~m)
    return BinaryMask(dist <= r)


def erode(mask: BinaryMask, radius) -> BinaryMask:
    """Shrink the mask by a disc of the given radius; radius 0 is identity."""
    r = _radius(radius)
    m = mask.as_bool()
    if r == 0 or not m.any():
        return BinaryMask(m)
    dist = ndimage.distance_transform_edt(m)
    return BinaryMask(dist > r)


def mask_edge(mask: BinaryMask) -> BinaryMask:
    """Boundary band: the mask minus its radius-1 erosion."""
    inner = erode(mask, 1).as_bool()
    return BinaryMask(mask.as_bool() & ~inner)


def _neighbors(padded: np.ndarray):
    """The 8 neighbor planes of the interior, clockwise from north."""
    return (
        padded[:-2, 1:-1],   # N
        padded[:-2, 2:],     # NE
        padded[1:-1, 2:],    # E
        padded[2:, 2:],      # SE
        padded[2:, 1:-1],    # S
        padded[2:, :-2],     # SW
        padded[1:-1, :-2],   # W
        padded[:-2, :-2],    # NW
    )


def _thin_pass(img: np.ndarray, second: bool) -> np.ndarray:
    p = np.pad(img, 1)
    n = _neighbors(p)
    b = sum(x.astype(np.int8) for x in n)
    ring = np.stack(n + (n[0],)).astype(np.int8)
    a = ((ring[1:] - ring[:-1]) == 1).sum(axis=0)
    north, east, south, west = n[0], n[2], n[4], n[6]
    if not second:
        cond = (north & east & south) == 0
        cond &= (east & south & west) == 0
    else:
        cond = (north & east & west) == 0
        cond &= (north & south & west) == 0
    remove = img.astype(bool) & (b >= 2) & (b <= 6) & (a == 1) & cond
    if remove.any():
        # A tiny blob (the 2x2 square is the smallest case) can have every
        # pixel deletable at once, which would erase the whole component.
        # Keep one pixel of any component that would otherwise vanish.
        labels, count = ndimage.label(img, structure=_EIGHT)
        if count:
            survivors = ndimage.sum_labels(
                img.astype(bool) & ~remove, labels, index=np.arange(1, count + 1)
            )
            for lbl in np.nonzero(survivors == 0)[0] + 1:
                rows, cols = np.nonzero(labels == lbl)
                remove[rows[0], cols[0]] = False
    out = img.copy()
    out[remove] = 0
    return out


def thin(mask: BinaryMask) -> BinaryMask:
    """Iterative two-subiteration thinning to a 1-pixel-wide skeleton.

    Runs alternating deletion passes until a fixed point, so the result
    is idempotent and keeps each connected component connected.
    """
    img = mask.data.copy()
    while True:
        before = img
        img = _thin_pass(img, second=False)
        img = _thin_pass(img, second=True)
        if np.array_equal(img, before):
            return BinaryMask(img)


def connected_components(mask: BinaryMask) -> tuple[np.ndarray, int]:
    """8-connected labeling: (label grid, component count)."""
    labels, n = ndimage.label(mask.as_bool(), structure=_EIGHT)
    return labels, int(n)
