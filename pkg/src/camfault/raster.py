"""8-bit RGB image buffers, lossless PNG I/O, and per-task seed derivation.

Every transform in this package consumes and produces :class:`ImageBuffer`
values: height x width x 3 arrays of unsigned 8-bit samples in R,G,B order.
Buffers are frozen after construction so they can be shared freely between
threads and processes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# Generator pinned so that seeded transforms are reproducible run-to-run and
# across worker processes.  Recorded in report headers.
RNG_NAME = "PCG64"

# PNG compressor settings fixed so repeated saves of the same buffer are
# byte-identical.
_PNG_COMPRESS_LEVEL = 6


class RasterError(Exception):
    """Raised for unreadable, unsupported, or malformed image files."""


@dataclass(frozen=True)
class ImageBuffer:
    """Immutable 8-bit RGB raster.

    ``data`` has shape (height, width, 3), dtype uint8, row-major.  The array
    is copied on construction if needed and marked read-only.
    """

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("zero-dimension image")
        if arr.dtype != np.uint8:
            raise ValueError(f"expected uint8 samples, got {arr.dtype}")
        if not arr.flags.c_contiguous or arr.flags.writeable:
            arr = np.ascontiguousarray(arr).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return 3

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.array_equal(self.data, other.data)
        )

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageBuffer":
        """Build a buffer from any (h, w, 3) array; values are clipped to
        [0, 255] and cast if the dtype is wider than uint8."""
        arr = np.asarray(arr)
        if arr.dtype != np.uint8:
            arr = np.clip(np.round(arr), 0, 255).astype(np.uint8)
        return cls(arr)

    def digest(self) -> str:
        """SHA-256 over dims and raw samples; convenient for parity checks."""
        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}x3:".encode())
        h.update(self.data.tobytes())
        return h.hexdigest()


def saturate_u8(values: np.ndarray) -> np.ndarray:
    """Round half away from zero and clamp to [0, 255] as uint8."""
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def _flatten_alpha(rgb: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    # Composite over black: out = rgb * alpha / 255, rounded half up.
    num = rgb.astype(np.uint32) * alpha.astype(np.uint32)[..., None]
    return ((num * 2 + 255) // 510).astype(np.uint8)


def load_image(path) -> ImageBuffer:
    """Load a lossless raster file into an 8-bit RGB buffer.

    Alpha, if present, is dropped after compositing over black.  16-bit
    samples are down-converted by truncating the low byte (value >> 8).
    Paletted and grayscale inputs are expanded to RGB.
    """
    path = Path(path)
    if not path.exists():
        raise RasterError(f"no such image file: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im)
                arr = (arr.astype(np.uint32) >> 8).astype(np.uint8)
                rgb = np.repeat(arr[..., None], 3, axis=2)
            elif mode == "P":
                converted = im.convert("RGBA" if "transparency" in im.info else "RGB")
                rgb = _pil_to_rgb(converted)
            else:
                rgb = _pil_to_rgb(im)
    except UnidentifiedImageError as exc:
        raise RasterError(f"unsupported or corrupt image: {path}") from exc
    except OSError as exc:
        raise RasterError(f"failed to decode {path}: {exc}") from exc
    if rgb.shape[0] < 1 or rgb.shape[1] < 1:
        raise RasterError(f"zero-dimension image: {path}")
    return ImageBuffer(rgb)


def _pil_to_rgb(im: Image.Image) -> np.ndarray:
    if im.mode == "RGB":
        return np.asarray(im)
    if im.mode in ("RGBA", "LA", "La"):
        rgba = np.asarray(im.convert("RGBA"))
        return _flatten_alpha(rgba[..., :3], rgba[..., 3])
    if im.mode == "L":
        arr = np.asarray(im)
        return np.repeat(arr[..., None], 3, axis=2)
    return np.asarray(im.convert("RGB"))


def save_image(img: ImageBuffer, path) -> None:
    """Write a buffer as PNG; the parent directory must already exist."""
    path = Path(path)
    if not path.parent.is_dir():
        raise RasterError(f"parent directory does not exist: {path.parent}")
    pil = Image.fromarray(np.asarray(img.data), mode="RGB")
    try:
        pil.save(path, format="PNG", compress_level=_PNG_COMPRESS_LEVEL, optimize=False)
    except OSError as exc:
        raise RasterError(f"failed to write {path}: {exc}") from exc


@dataclass(frozen=True)
class SeedSpec:
    """Identifies one (campaign seed, image, preset) stochastic stream."""

    global_seed: int = 0
    image_id: str = ""
    preset_name: str = ""


def derive_seed(spec: SeedSpec) -> int:
    """Derive the 64-bit stream seed for one (image, preset) task.

    SHA-256 over the UTF-8 string ``<global_seed>\\x1f<image_id>\\x1f<preset>``,
    first 8 bytes interpreted big-endian.  Stable across runs, platforms and
    thread schedules, and reproducible from any language with a SHA-256
    implementation.
    """
    message = "\x1f".join(
        (str(int(spec.global_seed)), spec.image_id, spec.preset_name)
    ).encode("utf-8")
    return int.from_bytes(hashlib.sha256(message).digest()[:8], "big")


def make_rng(spec: SeedSpec) -> np.random.Generator:
    """Seeded generator (PCG64) for the given stream spec."""
    return np.random.Generator(np.random.PCG64(derive_seed(spec)))
