"""Non-learned tube renderers that paint a mask into a background image.

``render_smoothed_mask`` adds a Gaussian-blurred copy of the mask.
``render_hand_drawn`` builds a richer cross profile (body, darkened or
brightened borderline band, emphasized centerline), bends it with a
smooth sinusoidal distortion, and attenuates the addition where the
background is already bright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core.convolve import gaussian_blur
from .core.morphology import mask_edge, thin
from .core.types import BinaryMask, Image, RngStream
from .errors import InvalidParameterError

__all__ = ["SmoothedMaskParams", "HandDrawnParams", "render_smoothed_mask", "render_hand_drawn"]


@dataclass(frozen=True)
class SmoothedMaskParams:
    """Signed intensity delta and blur width for the smoothed-mask style."""

    amplitude: float = 0.3
    blur_sigma: float = 1.5

    def __post_init__(self):
        a = float(self.amplitude)
        if not np.isfinite(a) or abs(a) > 1.0:
            raise InvalidParameterError(f"|amplitude| must be <= 1, got {self.amplitude!r}")
        s = float(self.blur_sigma)
        if not np.isfinite(s) or s <= 0.0:
            raise InvalidParameterError(f"blur_sigma must be > 0, got {self.blur_sigma!r}")
        object.__setattr__(self, "amplitude", a)
        object.__setattr__(self, "blur_sigma", s)


@dataclass(frozen=True)
class HandDrawnParams:
    """Cross-profile gains, distortion geometry, and the random stream.

    centerline_gain sets the sign and strength of the tube body and its
    emphasized centerline; border_gain strengthens the opposite-signed
    borderline band; distortion bends the profile by at most
    ``distortion_amplitude`` pixels with the given wavelength;
    local_intensity_gain in [0, 1] scales the addition down in bright
    regions.
    """

    rng: RngStream
    profile_blur_sigma: float = 1.0
    border_gain: float = 0.4
    centerline_gain: float = 0.35
    distortion_amplitude: float = 1.5
    distortion_wavelength: float = 40.0
    local_intensity_gain: float = 0.5

    def __post_init__(self):
        if not isinstance(self.rng, RngStream):
            raise InvalidParameterError("rng must be an RngStream")
        checks = [
            ("profile_blur_sigma", self.profile_blur_sigma, lambda v: v > 0),
            ("border_gain", self.border_gain, lambda v: v >= 0),
            ("centerline_gain", self.centerline_gain, lambda v: True),
            ("distortion_amplitude", self.distortion_amplitude, lambda v: v >= 0),
            ("distortion_wavelength", self.distortion_wavelength, lambda v: v > 0),
            ("local_intensity_gain", self.local_intensity_gain, lambda v: 0 <= v <= 1),
        ]
        for name, value, ok in checks:
            v = float(value)
            if not np.isfinite(v) or not ok(v):
                raise InvalidParameterError(f"invalid {name}: {value!r}")
            object.__setattr__(self, name, v)


def _check_shapes(cxr: Image, mask: BinaryMask) -> None:
    if cxr.shape != mask.shape:
        raise InvalidParameterError(
            f"image shape {cxr.shape} does not match mask shape {mask.shape}"
        )


def render_smoothed_mask(cxr: Image, mask: BinaryMask, p: SmoothedMaskParams) -> Image:
    """clamp(cxr + amplitude * blur(mask)); far-field pixels unchanged."""
    _check_shapes(cxr, mask)
    if p.amplitude == 0.0 or not mask.data.any():
        return Image(cxr.data.copy())
    blurred = gaussian_blur(mask.data.astype(np.float64), p.blur_sigma)
    return Image(np.clip(cxr.data + p.amplitude * blurred, 0.0, 1.0))


def _sinusoidal_warp(fieldv: np.ndarray, amplitude: float, wavelength: float,
                     gen: np.random.Generator) -> np.ndarray:
    h, w = fieldv.shape
    phase_x, phase_y = gen.uniform(0.0, 2.0 * math.pi, size=2)
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    # horizontal shift varies down the rows, vertical shift along columns
    dx = amplitude * np.sin(2.0 * math.pi * rows / wavelength + phase_x)
    dy = amplitude * np.sin(2.0 * math.pi * cols / wavelength + phase_y)
    return ndimage.map_coordinates(fieldv, [rows - dy, cols - dx], order=1, mode="nearest")


def render_hand_drawn(cxr: Image, mask: BinaryMask, p: HandDrawnParams) -> Image:
    """Profile build, smooth bend, and intensity-adapted addition.

    The signed profile is centerline_gain on the body plus the same
    again on the thinned centerline, minus an opposite-signed
    border_gain band on the mask's edge ring; Gaussian smoothing merges
    them into one cross profile. All-zero gains with zero distortion
    leave the image untouched.
    """
    _check_shapes(cxr, mask)
    if not mask.data.any():
        raise InvalidParameterError("hand-drawn rendering needs a non-empty mask")
    body = mask.data.astype(np.float64)
    cg = p.centerline_gain
    raw = cg * body
    if cg != 0.0:
        skel = thin(mask).data.astype(np.float64)
        edge = mask_edge(mask).data.astype(np.float64)
        raw = raw + cg * skel - math.copysign(1.0, cg) * p.border_gain * edge
    fieldv = gaussian_blur(raw, p.profile_blur_sigma)
    if p.distortion_amplitude > 0.0:
        fieldv = _sinusoidal_warp(
            fieldv, p.distortion_amplitude, p.distortion_wavelength, p.rng.generator()
        )
    addition = fieldv * (1.0 - p.local_intensity_gain * cxr.data)
    return Image(np.clip(cxr.data + addition, 0.0, 1.0))
