"""Image planes, file I/O, luminance conversion, cropping and patch tiling.

A plane is a plain 2-D float64 array with intensities nominally in [0, 1];
a color image is an (H, W, 3) array. All operations here are pure and never
mutate their inputs, so arrays can be shared freely across workers.

Supported file formats: binary PGM (P5) and PPM (P6) with 8-bit or 16-bit
big-endian samples, plus PNG when Pillow is installed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeError

# ITU-R BT.601 luma weights.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_PNM_SUFFIXES = {".pgm", ".ppm", ".pnm"}


def as_plane(arr) -> np.ndarray:
    """Validate ``arr`` as a 2-D plane and return it as float64."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D plane, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError("plane must have at least one row and one column")
    return a


def _read_pnm(data: bytes, name: str):
    if data[:1] != b"P" or data[1:2] not in (b"5", b"6"):
        raise FormatError(f"{name}: not a binary PGM/PPM file")
    channels = 1 if data[1:2] == b"5" else 3
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(data):
            raise FormatError(f"{name}: truncated header")
        c = data[pos : pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            try:
                fields.append(int(data[start:pos]))
            except ValueError:
                raise FormatError(f"{name}: malformed header token") from None
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"{name}: zero-dimension image")
    if not 0 < maxval < 65536:
        raise FormatError(f"{name}: invalid maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    payload = data[pos : pos + count * dtype.itemsize]
    if len(payload) < count * dtype.itemsize:
        raise FormatError(f"{name}: truncated pixel data")
    arr = np.frombuffer(payload, dtype=dtype, count=count).astype(np.float64)
    arr /= maxval
    shape = (height, width) if channels == 1 else (height, width, 3)
    return arr.reshape(shape)


def _read_png(path: Path):
    try:
        from PIL import Image
    except ImportError:
        raise FormatError(f"{path}: PNG support requires Pillow") from None
    with Image.open(path) as im:
        mode = im.mode
        arr = np.asarray(im)
    if arr.ndim == 2 and arr.size and min(arr.shape) >= 1:
        maxval = 65535.0 if mode in ("I", "I;16") else 255.0
        return arr.astype(np.float64) / maxval
    if arr.ndim == 3 and arr.shape[2] == 3 and mode == "RGB":
        return arr.astype(np.float64) / 255.0
    raise FormatError(f"{path}: unsupported PNG mode {mode}")


def load_image(path) -> np.ndarray:
    """Load an image, scaled to [0, 1] by the format's maximum sample value.

    Returns an (H, W) plane for grayscale files and an (H, W, 3) array for
    color files.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in _PNM_SUFFIXES:
        return _read_pnm(path.read_bytes(), str(path))
    if suffix == ".png":
        return _read_png(path)
    raise FormatError(f"{path}: unsupported image format {suffix!r}")


def save_image(img, path, bit_depth: int = 16) -> None:
    """Write a plane as PGM or an (H, W, 3) image as PPM (binary, big-endian)."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 2:
        magic = b"P5"
    elif a.ndim == 3 and a.shape[2] == 3:
        magic = b"P6"
    else:
        raise ShapeError(f"cannot save array of shape {a.shape}")
    if bit_depth not in (8, 16):
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    maxval = (1 << bit_depth) - 1
    q = np.rint(np.clip(a, 0.0, 1.0) * maxval)
    dtype = np.dtype(">u2") if bit_depth == 16 else np.dtype("u1")
    h, w = a.shape[:2]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(magic + b"\n" + f"{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(q.astype(dtype).tobytes())


def save_gray_u8(arr_u8: np.ndarray, path) -> None:
    """Write an already-quantized uint8 grid as 8-bit PGM or PNG."""
    a = np.ascontiguousarray(arr_u8, dtype=np.uint8)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D grid, got shape {a.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".png":
        try:
            from PIL import Image
        except ImportError:
            raise FormatError(f"{path}: PNG support requires Pillow") from None
        Image.fromarray(a, mode="L").save(path)
        return
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n" + f"{w} {h}\n255\n".encode("ascii"))
        fh.write(a.tobytes())


def to_luminance(img) -> np.ndarray:
    """Reduce an (H, W, 3) image to one plane with BT.601 weights.

    A plane passes through unchanged (already single-channel).
    """
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 2:
        return a.copy()
    if a.ndim == 3 and a.shape[2] == 3:
        wr, wg, wb = LUMA_WEIGHTS
        return wr * a[:, :, 0] + wg * a[:, :, 1] + wb * a[:, :, 2]
    raise ShapeError(f"expected (H, W) or (H, W, 3), got shape {a.shape}")


@dataclass(frozen=True)
class PatchGrid:
    """Non-overlapping square tiling of a plane, anchored at (0, 0).

    ``patches[i]`` is a read-only view into the source plane whose top-left
    corner sits at ``origins[i]`` (x, y). Trailing remainder rows/columns
    that do not fill a whole patch are discarded.
    """

    patch_size: int
    rows: int
    cols: int
    origins: tuple
    patches: tuple

    def __len__(self):
        return len(self.patches)


def tile_patches(plane, patch_size: int) -> PatchGrid:
    """Tile ``plane`` into all non-overlapping patch_size x patch_size patches."""
    p = as_plane(plane)
    if patch_size < 1:
        raise ValueError(f"patch_size must be >= 1, got {patch_size}")
    h, w = p.shape
    rows, cols = h // patch_size, w // patch_size
    if rows == 0 or cols == 0:
        raise ValueError(
            f"patch_size {patch_size} exceeds plane dimensions {w}x{h}: empty grid"
        )
    origins = []
    patches = []
    for iy in range(rows):
        for ix in range(cols):
            x, y = ix * patch_size, iy * patch_size
            origins.append((x, y))
            view = p[y : y + patch_size, x : x + patch_size]
            view.flags.writeable = False
            patches.append(view)
    return PatchGrid(patch_size, rows, cols, tuple(origins), tuple(patches))


def crop(plane, x0: int, y0: int, w: int, h: int) -> np.ndarray:
    """Return a copy of the w x h sub-rectangle whose top-left corner is (x0, y0)."""
    p = as_plane(plane)
    ph, pw = p.shape
    if x0 < 0 or y0 < 0 or w < 1 or h < 1 or x0 + w > pw or y0 + h > ph:
        raise ValueError(
            f"crop rectangle ({x0},{y0},{w},{h}) out of bounds for {pw}x{ph} plane"
        )
    return p[y0 : y0 + h, x0 : x0 + w].copy()
