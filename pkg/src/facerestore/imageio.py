"""8-bit image file I/O: PNG plus binary PGM (P5) and PPM (P6).

Loading maps sample values v to v/255; saving writes round(v*255) after
clamping to [0, 1].
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .image_core import ColorSpace, ImagePlane, ImageStack

__all__ = ["read_image", "write_image", "read_plane", "write_plane"]

_PNM_TOKEN = re.compile(rb"^\s*(?:#[^\n]*\n\s*)*(\S+)")


def _to_unit(a: np.ndarray) -> np.ndarray:
    return a.astype(np.float64) / 255.0


def _to_bytes(a: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.clip(a, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)


def _read_pnm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if raw[:2] not in (b"P5", b"P6"):
        raise DataError(f"{path}: not a binary PGM/PPM file")
    channels = 1 if raw[:2] == b"P5" else 3
    pos = 2
    fields = []
    while len(fields) < 3:
        m = _PNM_TOKEN.match(raw, pos)
        if not m:
            raise DataError(f"{path}: truncated PNM header")
        fields.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as e:
        raise DataError(f"{path}: bad PNM header field: {e}") from e
    if maxval != 255:
        raise DataError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    n = width * height * channels
    pixels = np.frombuffer(raw, dtype=np.uint8, count=n, offset=pos)
    if pixels.size != n:
        raise DataError(f"{path}: PNM payload truncated")
    return pixels.reshape((height, width, channels))


def _write_pnm(path: Path, a: np.ndarray) -> None:
    height, width, channels = a.shape
    magic = b"P5" if channels == 1 else b"P6"
    header = magic + f"\n{width} {height}\n255\n".encode("ascii")
    path.write_bytes(header + a.tobytes())


def read_image(path) -> ImageStack:
    """Read a PNG/PGM/PPM file into an RGB or luma stack."""
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".ppm", ".pnm"):
        arr = _read_pnm(path)
    else:
        try:
            with Image.open(path) as im:
                im = im.convert("L") if im.mode in ("L", "I;16", "1") else im.convert("RGB")
                arr = np.asarray(im)
        except (OSError, ValueError) as e:
            raise DataError(f"{path}: {e}") from e
        if arr.ndim == 2:
            arr = arr[:, :, None]
    unit = _to_unit(arr)
    if unit.shape[2] == 1:
        return ImageStack((ImagePlane(unit[:, :, 0]),), ColorSpace.LUMA)
    return ImageStack.rgb(unit[:, :, 0], unit[:, :, 1], unit[:, :, 2])


def write_image(path, img: ImageStack) -> None:
    """Write a stack as PNG (by extension) or binary PGM/PPM."""
    path = Path(path)
    arr = np.stack([_to_bytes(c.data) for c in img.channels], axis=-1)
    if path.suffix.lower() in (".pgm", ".ppm", ".pnm"):
        if arr.shape[2] not in (1, 3):
            raise DataError(f"cannot write {arr.shape[2]}-channel stack as PNM")
        _write_pnm(path, arr)
        return
    if arr.shape[2] == 1:
        Image.fromarray(arr[:, :, 0], mode="L").save(path)
    elif arr.shape[2] == 3:
        Image.fromarray(arr, mode="RGB").save(path)
    else:
        raise DataError(f"cannot write {arr.shape[2]}-channel stack as image")


def read_plane(path) -> ImagePlane:
    """Read a single-channel file (or collapse RGB via BT.601)."""
    stack = read_image(path)
    if len(stack.channels) == 1:
        return stack.channels[0]
    from .image_core import rgb_to_luma

    return rgb_to_luma(stack)


def write_plane(path, plane: ImagePlane) -> None:
    write_image(path, ImageStack((plane,), ColorSpace.LUMA))
