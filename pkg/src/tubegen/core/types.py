"""Container types for images, binary masks, and seeded RNG streams."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameterError

__all__ = ["Image", "BinaryMask", "RngStream", "as_float_grid"]


def as_float_grid(obj) -> np.ndarray:
    """Return a finite 2-D float64 view of an Image or array-like.

    Accepts raw grids so that filter math can run on intermediate
    values outside [0, 1]; range enforcement belongs to Image itself.
    """
    if isinstance(obj, Image):
        return obj.data
    if isinstance(obj, BinaryMask):
        return obj.data.astype(np.float64)
    arr = np.asarray(obj, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidParameterError(
            f"expected a non-empty 2-D grid, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError("grid contains NaN or Inf")
    return arr


@dataclass(frozen=True, eq=False)
class Image:
    """A grayscale image: float64 intensities in [0, 1], row-major.

    ``data[row, col]``; row 0 is the top of the image.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise InvalidParameterError(
                f"Image needs a non-empty 2-D grid, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("Image intensities must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise InvalidParameterError(
                "Image intensities must lie in [0, 1]; "
                f"got range [{arr.min():g}, {arr.max():g}]"
            )
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """A {0, 1} mask with the same geometry conventions as Image."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.size == 0:
            raise InvalidParameterError(
                f"BinaryMask needs a non-empty 2-D grid, got shape {arr.shape}"
            )
        if arr.dtype == bool:
            arr = arr.astype(np.uint8)
        else:
            vals = np.unique(arr)
            if not np.isin(vals, (0, 1)).all():
                raise InvalidParameterError(
                    f"BinaryMask values must be 0 or 1, got {vals[:8]}"
                )
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def as_bool(self) -> np.ndarray:
        return self.data.astype(bool)

    def count(self) -> int:
        """Number of set pixels."""
        return int(self.data.sum())


_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream-id) pair naming one reproducible random stream.

    The same pair yields the same draw sequence on every platform, so
    parallel workloads can hand each item its own stream id and remain
    order-independent.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise InvalidParameterError(f"{name} must be an integer")
            if not 0 <= int(v) < _U64:
                raise InvalidParameterError(f"{name} must fit in 64 unsigned bits")
            object.__setattr__(self, name, int(v))

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.stream_id]))

    def child(self, stream_id: int) -> "RngStream":
        """Same seed, different stream id."""
        return RngStream(self.seed, stream_id)
