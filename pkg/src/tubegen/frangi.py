"""Multi-scale Hessian tubular-shape filter with analytic image gradients.

Per scale sigma, second derivatives of the Gaussian-smoothed image give
a symmetric 2x2 Hessian per pixel. Its eigenvalues, ordered by
magnitude |lam1| <= |lam2|, feed two measures: blobness (the eigenvalue
magnitude ratio, low on line-like structure) and structureness (the
Frobenius norm, low in flat background). The per-scale response is

    exp(-blobness^2 / (2 beta^2)) * (1 - exp(-structureness^2 / (2 c^2)))

gated to zero where the eigenvalue polarity says the ridge is the wrong
sign (bright ridges have lam2 < 0). Scales combine either by a softmax-
weighted average or a hard maximum. The masked mean of the combined map
is the scalar objective the in-painting optimizer differentiates, and
``grad_masked_mean_response`` returns its exact gradient with respect
to every input pixel by running the chain rule backward through the
combination, the response formula, the eigen-decomposition, and the
transposed convolutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core.convolve import adjoint_convolve_separable, convolve_separable
from .core.kernels import gaussian_kernel
from .core.types import BinaryMask, Image, as_float_grid
from .errors import InvalidParameterError

__all__ = [
    "FrangiParams",
    "HessianField",
    "VesselnessMap",
    "hessian_at_scale",
    "eigen_2x2",
    "blobness",
    "structureness",
    "vesselness_at_scale",
    "multiscale_vesselness",
    "masked_mean_response",
    "grad_masked_mean_response",
    "masked_response_and_grad",
]

POLARITIES = ("bright-tubes", "dark-tubes", "both")
COMBINE_MODES = ("softmax-weighted", "hard-max")
BLOBNESS_FORMS = ("ratio", "sqrt")


@dataclass(frozen=True)
class FrangiParams:
    """Filter configuration.

    sigmas: detection scales in pixels, strictly increasing.
    beta: blobness sensitivity; c: structureness sensitivity.
    gamma: scale-normalization exponent on the second derivatives
        (gamma=2 makes responses comparable across sigma; gamma=0 is
        the raw derivative).
    polarity: which ridge sign passes the gate.
    combine: softmax-weighted average or hard maximum over scales.
    blobness_form: "ratio" uses |lam1|/|lam2|; "sqrt" uses
        |lam1|/sqrt(|lam2|).
    """

    sigmas: tuple = (2.0, 4.0, 6.0)
    beta: float = 0.5
    c: float = 0.5
    gamma: float = 2.0
    polarity: str = "bright-tubes"
    combine: str = "softmax-weighted"
    softmax_temperature: float = 1.0
    blobness_form: str = "ratio"

    def __post_init__(self):
        sig = tuple(float(s) for s in np.atleast_1d(np.asarray(self.sigmas, dtype=float)))
        if len(sig) == 0:
            raise InvalidParameterError("sigmas must be non-empty")
        if any(not np.isfinite(s) or s <= 0 for s in sig):
            raise InvalidParameterError(f"sigmas must be finite and > 0, got {sig}")
        if any(b >= a for a, b in zip(sig[1:], sig)):
            raise InvalidParameterError(f"sigmas must be strictly increasing, got {sig}")
        object.__setattr__(self, "sigmas", sig)
        for name in ("beta", "c", "softmax_temperature"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise InvalidParameterError(f"{name} must be finite and > 0, got {v!r}")
            object.__setattr__(self, name, v)
        g = float(self.gamma)
        if not np.isfinite(g) or g < 0:
            raise InvalidParameterError(f"gamma must be finite and >= 0, got {g!r}")
        object.__setattr__(self, "gamma", g)
        if self.polarity not in POLARITIES:
            raise InvalidParameterError(
                f"polarity must be one of {POLARITIES}, got {self.polarity!r}"
            )
        if self.combine not in COMBINE_MODES:
            raise InvalidParameterError(
                f"combine must be one of {COMBINE_MODES}, got {self.combine!r}"
            )
        if self.blobness_form not in BLOBNESS_FORMS:
            raise InvalidParameterError(
                f"blobness_form must be one of {BLOBNESS_FORMS}, got {self.blobness_form!r}"
            )


@dataclass(frozen=True, eq=False)
class HessianField:
    """Scale-normalized second derivatives and ordered eigenvalues.

    x runs along columns, y along rows. lam1/lam2 are ordered so
    |lam1| <= |lam2| at every pixel.
    """

    sigma: float
    ixx: np.ndarray
    ixy: np.ndarray
    iyy: np.ndarray
    lam1: np.ndarray = field(default=None)
    lam2: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.lam1 is None or self.lam2 is None:
            l1, l2 = eigen_2x2(self.ixx, self.ixy, self.iyy)
            object.__setattr__(self, "lam1", l1)
            object.__setattr__(self, "lam2", l2)


@dataclass(frozen=True, eq=False)
class VesselnessMap:
    """Combined response in [0, 1], optionally with per-scale maps."""

    response: np.ndarray
    sigmas: tuple
    per_scale: tuple = None


def _kernels(sigma: float):
    return gaussian_kernel(sigma, 0), gaussian_kernel(sigma, 1), gaussian_kernel(sigma, 2)


def _hessian_arrays(arr: np.ndarray, sigma: float, gamma: float):
    g0, g1, g2 = _kernels(sigma)
    norm = sigma**gamma
    ixx = convolve_separable(arr, g2, g0) * norm
    iyy = convolve_separable(arr, g0, g2) * norm
    ixy = convolve_separable(arr, g1, g1) * norm
    return ixx, ixy, iyy


def hessian_at_scale(img, sigma: float, gamma: float = 2.0) -> HessianField:
    """Hessian of the Gaussian-smoothed image, scaled by sigma**gamma."""
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidParameterError(f"sigma must be finite and > 0, got {sigma!r}")
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma < 0:
        raise InvalidParameterError(f"gamma must be finite and >= 0, got {gamma!r}")
    arr = as_float_grid(img)
    ixx, ixy, iyy = _hessian_arrays(arr, sigma, gamma)
    return HessianField(sigma, ixx, ixy, iyy)


def _eigen_parts(ixx, ixy, iyy):
    m = 0.5 * (ixx + iyy)
    q = 0.5 * (ixx - iyy)
    s = np.hypot(q, ixy)
    hi = m + s
    lo = m - s
    take_hi = np.abs(hi) >= np.abs(lo)
    lam2 = np.where(take_hi, hi, lo)
    lam1 = np.where(take_hi, lo, hi)
    return lam1, lam2, q, s, take_hi


def eigen_2x2(ixx, ixy, iyy):
    """Eigenvalues of [[ixx, ixy], [ixy, iyy]], ordered |lam1| <= |lam2|.

    A magnitude tie between distinct eigenvalues (trace zero) resolves
    to lam1 = the smaller (negative) one. Works elementwise on arrays.
    """
    ixx = np.asarray(ixx, dtype=np.float64)
    ixy = np.asarray(ixy, dtype=np.float64)
    iyy = np.asarray(iyy, dtype=np.float64)
    if not (np.all(np.isfinite(ixx)) and np.all(np.isfinite(ixy)) and np.all(np.isfinite(iyy))):
        raise InvalidParameterError("Hessian entries must be finite")
    lam1, lam2, _, _, _ = _eigen_parts(ixx, ixy, iyy)
    if lam1.ndim == 0:
        return float(lam1), float(lam2)
    return lam1, lam2


def blobness(lam1, lam2, form: str = "ratio"):
    """Eigenvalue magnitude ratio; 0 where lam2 == 0.

    "ratio" is |lam1|/|lam2|; "sqrt" is |lam1|/sqrt(|lam2|).
    """
    if form not in BLOBNESS_FORMS:
        raise InvalidParameterError(f"form must be one of {BLOBNESS_FORMS}, got {form!r}")
    a1 = np.abs(np.asarray(lam1, dtype=np.float64))
    a2 = np.abs(np.asarray(lam2, dtype=np.float64))
    denom = a2 if form == "ratio" else np.sqrt(a2)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(a2 > 0, a1 / np.where(a2 > 0, denom, 1.0), 0.0)
    if r.ndim == 0:
        return float(r)
    return r


def structureness(lam1, lam2):
    """Frobenius norm of the Hessian: sqrt(lam1^2 + lam2^2)."""
    out = np.hypot(np.asarray(lam1, dtype=np.float64), np.asarray(lam2, dtype=np.float64))
    if out.ndim == 0:
        return float(out)
    return out


def _gate(lam2: np.ndarray, polarity: str) -> np.ndarray:
    if polarity == "bright-tubes":
        return lam2 <= 0
    if polarity == "dark-tubes":
        return lam2 >= 0
    return np.ones_like(lam2, dtype=bool)


def _response_from_eigs(lam1, lam2, params: FrangiParams):
    r = blobness(lam1, lam2, params.blobness_form)
    s2 = lam1 * lam1 + lam2 * lam2
    eb = np.exp(-(r * r) / (2.0 * params.beta**2))
    es = np.exp(-s2 / (2.0 * params.c**2))
    v = eb * (1.0 - es)
    v = np.where(_gate(lam2, params.polarity), v, 0.0)
    return v, r, eb, es


def vesselness_at_scale(fieldv: HessianField, params: FrangiParams) -> np.ndarray:
    """Single-scale response in [0, 1] from precomputed eigenvalues."""
    v, _, _, _ = _response_from_eigs(fieldv.lam1, fieldv.lam2, params)
    return v


def _scale_stack(arr: np.ndarray, params: FrangiParams):
    """Per-scale responses stacked on axis 0, plus backward intermediates."""
    stacks = []
    saved = []
    for sigma in params.sigmas:
        ixx, ixy, iyy = _hessian_arrays(arr, sigma, params.gamma)
        lam1, lam2, q, s, take_hi = _eigen_parts(ixx, ixy, iyy)
        v, r, eb, es = _response_from_eigs(lam1, lam2, params)
        stacks.append(v)
        saved.append((sigma, ixy, lam1, lam2, q, s, take_hi, r, eb, es))
    return np.stack(stacks), saved


def _combine(stack: np.ndarray, params: FrangiParams):
    """Combined map plus softmax weights (None in hard-max mode)."""
    if params.combine == "hard-max":
        return stack.max(axis=0), None
    z = stack / params.softmax_temperature
    z = z - z.max(axis=0, keepdims=True)
    w = np.exp(z)
    w /= w.sum(axis=0, keepdims=True)
    return (w * stack).sum(axis=0), w


def multiscale_response(img, params: FrangiParams) -> np.ndarray:
    """Combined response as a bare grid; accepts batched leading axes."""
    if isinstance(img, (Image, BinaryMask)):
        arr = as_float_grid(img)
    else:
        arr = np.asarray(img, dtype=np.float64)
        if arr.ndim < 2 or arr.shape[-1] == 0 or arr.shape[-2] == 0:
            raise InvalidParameterError(f"expected a 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("grid contains NaN or Inf")
    stack, _ = _scale_stack(arr, params)
    combined, _ = _combine(stack, params)
    return combined


def multiscale_vesselness(img, params: FrangiParams, keep_per_scale: bool = False) -> VesselnessMap:
    """Combine per-scale responses across ``params.sigmas``."""
    arr = as_float_grid(img)
    stack, _ = _scale_stack(arr, params)
    combined, _ = _combine(stack, params)
    per_scale = tuple(stack) if keep_per_scale else None
    return VesselnessMap(combined, params.sigmas, per_scale)


def _mask_array(mask, shape) -> np.ndarray:
    m = mask.as_bool() if isinstance(mask, BinaryMask) else np.asarray(mask).astype(bool)
    if m.shape != shape:
        raise InvalidParameterError(f"mask shape {m.shape} does not match image shape {shape}")
    if not m.any():
        raise InvalidParameterError("mask has no set pixels")
    return m


def masked_mean_response(img, mask, params: FrangiParams) -> float:
    """Mean combined response over the mask's set pixels."""
    arr = as_float_grid(img)
    m = _mask_array(mask, arr.shape)
    stack, _ = _scale_stack(arr, params)
    combined, _ = _combine(stack, params)
    return float(combined[m].mean())


def _blobness_derivs(lam1, lam2, r, form: str):
    """dR/dlam1 and dR/dlam2, zero where lam2 == 0."""
    a1 = np.abs(lam1)
    a2 = np.abs(lam2)
    nz = a2 > 0
    safe = np.where(nz, a2, 1.0)
    if form == "ratio":
        dr1 = np.where(nz, np.sign(lam1) / safe, 0.0)
        dr2 = np.where(nz, -a1 * np.sign(lam2) / (safe * safe), 0.0)
    else:
        root = np.sqrt(safe)
        dr1 = np.where(nz, np.sign(lam1) / root, 0.0)
        dr2 = np.where(nz, -0.5 * a1 * np.sign(lam2) / (safe * root), 0.0)
    return dr1, dr2


def masked_response_and_grad(img, mask, params: FrangiParams) -> tuple[float, np.ndarray]:
    """Masked mean response and its exact gradient in one pass.

    The gradient applies the chain rule through the masked mean, the
    scale combination, the response exponentials, the closed-form
    eigenvalue derivatives, and the adjoint convolutions. At the
    non-smooth points (lam2 = 0, eigenvalue magnitude ties, hard-max
    argmax ties) a one-sided derivative is used; the result is always
    finite.
    """
    arr = as_float_grid(img)
    m = _mask_array(mask, arr.shape)
    stack, saved = _scale_stack(arr, params)
    combined, weights = _combine(stack, params)
    value = float(combined[m].mean())

    g_comb = np.zeros_like(arr)
    g_comb[m] = 1.0 / m.sum()

    if weights is None:
        # hard-max: route the gradient through the first argmax scale
        arg = stack.argmax(axis=0)
        g_stack = np.where(arg[None] == np.arange(stack.shape[0])[:, None, None], g_comb[None], 0.0)
    else:
        vbar = combined
        g_stack = g_comb[None] * weights * (1.0 + (stack - vbar[None]) / params.softmax_temperature)

    grad = np.zeros_like(arr)
    inv_b2 = 1.0 / params.beta**2
    inv_c2 = 1.0 / params.c**2
    for g_v, (sigma, ixy, lam1, lam2, q, s, take_hi, r, eb, es) in zip(g_stack, saved):
        gate = _gate(lam2, params.polarity) & (np.abs(lam2) > 0)
        dr1, dr2 = _blobness_derivs(lam1, lam2, r, params.blobness_form)
        common = -(r * inv_b2) * eb * (1.0 - es)
        dv_dl1 = np.where(gate, common * dr1 + eb * es * lam1 * inv_c2, 0.0)
        dv_dl2 = np.where(gate, common * dr2 + eb * es * lam2 * inv_c2, 0.0)
        g_l1 = g_v * dv_dl1
        g_l2 = g_v * dv_dl2

        g_hi = np.where(take_hi, g_l2, g_l1)
        g_lo = np.where(take_hi, g_l1, g_l2)
        nz = s > 0
        qs = np.where(nz, q / np.where(nz, 2.0 * s, 1.0), 0.0)
        xys = np.where(nz, ixy / np.where(nz, s, 1.0), 0.0)
        g_ixx = g_hi * (0.5 + qs) + g_lo * (0.5 - qs)
        g_iyy = g_hi * (0.5 - qs) + g_lo * (0.5 + qs)
        g_ixy = (g_hi - g_lo) * xys

        norm = sigma**params.gamma
        g0, g1, g2 = _kernels(sigma)
        grad += adjoint_convolve_separable(g_ixx * norm, g2, g0)
        grad += adjoint_convolve_separable(g_iyy * norm, g0, g2)
        grad += adjoint_convolve_separable(g_ixy * norm, g1, g1)
    return value, grad


def grad_masked_mean_response(img, mask, params: FrangiParams) -> np.ndarray:
    """Gradient of ``masked_mean_response`` with respect to each pixel."""
    _, grad = masked_response_and_grad(img, mask, params)
    return grad
