"""Shared numerics and containers: images, masks, kernels, convolution,
morphology, seeded RNG streams, and file I/O."""

from .convolve import adjoint_convolve_separable, convolve_separable, gaussian_blur
from .io import load_image, load_mask, save_image, save_mask
from .kernels import Kernel1D, gaussian_kernel
from .morphology import connected_components, dilate, erode, mask_edge, thin
from .types import BinaryMask, Image, RngStream, as_float_grid

__all__ = [
    "BinaryMask",
    "Image",
    "Kernel1D",
    "RngStream",
    "adjoint_convolve_separable",
    "as_float_grid",
    "connected_components",
    "convolve_separable",
    "dilate",
    "erode",
    "gaussian_blur",
    "gaussian_kernel",
    "load_image",
    "load_mask",
    "mask_edge",
    "save_image",
    "save_mask",
    "thin",
]
