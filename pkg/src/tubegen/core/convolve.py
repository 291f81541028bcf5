"""Separable 2-D convolution with mirrored borders, plus its exact adjoint.

Borders use reflect-101 (mirror about the edge pixel without repeating
it), the standard choice for derivative filters: a constant ramp stays
a ramp, so first derivatives see no spurious edge step. ``np.pad`` with
``mode="reflect"`` implements exactly this scheme, including the
multi-bounce case where the kernel radius exceeds the image extent.

The adjoint is the true linear transpose of the forward operator,
including the border folding, which the analytic gradients in the
filter module rely on. Both directions accept stacked inputs: leading
axes are batch dimensions, the trailing two axes are the image.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError
from .kernels import Kernel1D

__all__ = ["convolve_separable", "adjoint_convolve_separable", "gaussian_blur"]


def _check_extent(k: Kernel1D, extent: int, axis_name: str) -> None:
    if len(k) > 4 * extent:
        raise InvalidParameterError(
            f"kernel of {len(k)} taps exceeds 4x the image {axis_name} ({extent})"
        )


def _conv_last_axis_slices(arr: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """True convolution along the last axis with mirrored borders."""
    r = (taps.size - 1) // 2
    n = arr.shape[-1]
    pad = [(0, 0)] * (arr.ndim - 1) + [(r, r)]
    p = np.pad(arr, pad, mode="reflect")
    out = np.zeros_like(arr)
    # y[j] = sum_i taps[i] * p[j + 2r - i]
    for i in range(taps.size):
        out += taps[i] * p[..., 2 * r - i : 2 * r - i + n]
    return out


_matrix_cache: dict = {}


def _operator_matrix(n: int, taps: np.ndarray) -> np.ndarray:
    """Dense matrix M with conv(x) == x @ M for row vectors of length n.

    Built by pushing the identity through the slice implementation, so
    the mirrored border (multi-bounce included) is baked in.
    """
    key = (n, taps.tobytes())
    mat = _matrix_cache.get(key)
    if mat is None:
        if len(_matrix_cache) >= 32:
            _matrix_cache.clear()
        mat = _conv_last_axis_slices(np.eye(n), taps)
        _matrix_cache[key] = mat
    return mat


def _conv_last_axis(arr: np.ndarray, taps: np.ndarray, adjoint: bool = False) -> np.ndarray:
    r = (taps.size - 1) // 2
    if r == 0:
        return arr * taps[0]
    n = arr.shape[-1]
    rows = arr.size // n
    if rows >= 4 * n:
        # batched stacks: one BLAS product beats 2r+1 strided passes
        mat = _operator_matrix(n, taps)
        flat = arr.reshape(rows, n) @ (mat.T if adjoint else mat)
        return flat.reshape(arr.shape)
    if adjoint:
        return _adjoint_last_axis_slices(arr, taps)
    return _conv_last_axis_slices(arr, taps)


def _adjoint_last_axis_slices(arr: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Exact transpose of ``_conv_last_axis_slices`` for the same taps."""
    r = (taps.size - 1) // 2
    n = arr.shape[-1]
    w = np.zeros(arr.shape[:-1] + (n + 2 * r,), dtype=np.float64)
    for i in range(taps.size):
        w[..., 2 * r - i : 2 * r - i + n] += taps[i] * arr
    out = w[..., r : r + n].copy()
    if r <= n - 1:
        # single mirror bounce: padded index p maps to source r-p on the
        # left and n-2-q on the right
        out[..., 1 : r + 1] += w[..., :r][..., ::-1]
        out[..., n - 1 - r : n - 1] += w[..., n + r :][..., ::-1]
    else:
        src = np.pad(np.arange(n), r, mode="reflect")
        out = np.zeros(arr.shape[:-1] + (n,), dtype=np.float64)
        wm = np.moveaxis(w, -1, 0)
        om = np.moveaxis(out, -1, 0)
        np.add.at(om, src, wm)
    return out


def _apply_axis(arr: np.ndarray, taps: np.ndarray, axis: int, adjoint: bool) -> np.ndarray:
    moved = np.moveaxis(arr, axis, -1)
    out = _conv_last_axis(np.ascontiguousarray(moved), taps, adjoint=adjoint)
    return np.moveaxis(out, -1, axis)


def _validate(grid, kx: Kernel1D, ky: Kernel1D, border: str) -> np.ndarray:
    if border != "reflect":
        raise InvalidParameterError(f"unsupported border mode {border!r}")
    arr = np.asarray(grid, dtype=np.float64)
    if arr.ndim < 2 or arr.shape[-1] == 0 or arr.shape[-2] == 0:
        raise InvalidParameterError(f"expected a non-empty 2-D grid, got shape {arr.shape}")
    _check_extent(kx, arr.shape[-1], "width")
    _check_extent(ky, arr.shape[-2], "height")
    return arr


def convolve_separable(grid, kx: Kernel1D, ky: Kernel1D, border: str = "reflect") -> np.ndarray:
    """Convolve rows with ``kx`` and columns with ``ky``.

    Equals dense 2-D convolution with the outer-product kernel. ``kx``
    runs along the x axis (columns), ``ky`` along the y axis (rows).
    """
    arr = _validate(grid, kx, ky, border)
    out = _apply_axis(arr, kx.taps, -1, adjoint=False)
    return _apply_axis(out, ky.taps, -2, adjoint=False)


def adjoint_convolve_separable(grid, kx: Kernel1D, ky: Kernel1D, border: str = "reflect") -> np.ndarray:
    """Transpose of ``convolve_separable`` with identical arguments.

    Satisfies <conv(x), z> == <x, adjoint(z)> exactly up to rounding;
    used to backpropagate through the smoothing stages.
    """
    arr = _validate(grid, kx, ky, border)
    out = _apply_axis(arr, ky.taps, -2, adjoint=True)
    return _apply_axis(out, kx.taps, -1, adjoint=True)


def gaussian_blur(grid, sigma: float) -> np.ndarray:
    """Isotropic Gaussian smoothing, a convenience for the renderers."""
    from .kernels import gaussian_kernel

    k = gaussian_kernel(sigma, 0)
    return convolve_separable(grid, k, k)
