"""Grayscale image file I/O: binary PGM (P5) and 8/16-bit PNG.

Intensities are normalized to [0, 1] on load and quantized back on
save, so a save/load round trip is exact to within one quantization
level. Masks travel as ordinary image files with values {0, 255} (or
{0, 65535} at 16 bit). Writes go through a temp file plus rename so
readers never observe a partial file.
"""

from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from ..errors import FormatError, InvalidParameterError
from .types import BinaryMask, Image

__all__ = ["load_image", "save_image", "load_mask", "save_mask"]

_PGM_TOKEN = re.compile(rb"^(?:\s|#[^\n]*\n?)*(\S+)")


def _pgm_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """Read whitespace/comment-separated header tokens, return end offset."""
    tokens = []
    pos = 0
    for _ in range(count):
        m = _PGM_TOKEN.match(buf[pos:])
        if not m:
            raise FormatError("truncated PGM header")
        tokens.append(m.group(1))
        pos += m.end(1)
    return tokens, pos


def _load_pgm(buf: bytes, path) -> np.ndarray:
    try:
        tokens, pos = _pgm_tokens(buf, 4)
        width, height, maxval = (int(t) for t in tokens[1:])
    except (ValueError, FormatError) as exc:
        raise FormatError(f"{path}: malformed PGM header ({exc})") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise FormatError(f"{path}: invalid PGM dimensions/maxval")
    raster = buf[pos + 1 :]
    if maxval < 256:
        expected = width * height
        dtype = np.uint8
    else:
        expected = 2 * width * height
        dtype = np.dtype(">u2")
    if len(raster) < expected:
        raise FormatError(f"{path}: PGM raster truncated")
    arr = np.frombuffer(raster[:expected], dtype=dtype).reshape(height, width)
    return arr.astype(np.float64) / maxval


def _load_png(path) -> np.ndarray:
    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "1":
                im = im.convert("L")
                mode = "L"
            if mode == "L":
                return np.asarray(im, dtype=np.float64) / 255.0
            if mode in ("I;16", "I"):
                arr = np.asarray(im, dtype=np.float64)
                if arr.max(initial=0.0) > 65535:
                    raise FormatError(f"{path}: sample values exceed 16 bits")
                return arr / 65535.0
            raise FormatError(f"{path}: not a grayscale image (mode {mode})")
    except UnidentifiedImageError:
        raise FormatError(f"{path}: not a recognized PNG file") from None
    except (OSError, SyntaxError) as exc:
        # PIL signals corrupt chunks or truncated payloads this way
        raise FormatError(f"{path}: broken PNG ({exc})") from None


def load_image(path) -> Image:
    """Load a PGM (P5) or grayscale PNG file as an Image in [0, 1]."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc})") from None
    if len(buf) == 0:
        raise FormatError(f"{path}: empty file")
    if buf[:2] == b"P5":
        data = _load_pgm(buf, path)
    elif buf[:8] == b"\x89PNG\r\n\x1a\n":
        data = _load_png(path)
    else:
        raise FormatError(f"{path}: unsupported format (expected PGM P5 or PNG)")
    try:
        return Image(data)
    except InvalidParameterError as exc:
        raise FormatError(f"{path}: {exc}") from None


def _atomic_write(path: Path, writer) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=path.suffix + ".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def save_image(img: Image, path, bits: int = 16) -> None:
    """Write an Image as PGM (.pgm) or PNG (.png) at 8 or 16 bits."""
    if bits not in (8, 16):
        raise InvalidParameterError(f"bits must be 8 or 16, got {bits!r}")
    path = Path(path)
    maxval = 255 if bits == 8 else 65535
    q = np.rint(np.clip(img.data, 0.0, 1.0) * maxval)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        raster = q.astype(np.uint8 if bits == 8 else np.dtype(">u2")).tobytes()
        header = f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii")

        def write_pgm(fh):
            fh.write(header)
            fh.write(raster)

        _atomic_write(path, write_pgm)
    elif suffix == ".png":
        if bits == 8:
            pim = PILImage.fromarray(q.astype(np.uint8))
        else:
            pim = PILImage.fromarray(q.astype(np.uint16))

        def write_png(fh):
            pim.save(fh, format="PNG")

        _atomic_write(path, write_png)
    else:
        raise FormatError(f"unsupported output extension {path.suffix!r} (use .pgm or .png)")


def load_mask(path) -> BinaryMask:
    """Load a mask image; every sample must be exactly 0 or full-scale."""
    img = load_image(path)
    vals = np.unique(img.data)
    if not np.isin(vals, (0.0, 1.0)).all():
        raise FormatError(
            f"{path}: mask values must be 0 or full-scale, got levels {vals[:8]}"
        )
    return BinaryMask(img.data.astype(np.uint8))


def save_mask(mask: BinaryMask, path) -> None:
    """Write a mask as an 8-bit image with values {0, 255}."""
    save_image(Image(mask.data.astype(np.float64)), path, bits=8)
