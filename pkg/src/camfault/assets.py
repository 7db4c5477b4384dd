"""Overlay assets: lens scratches, dirt, condensation, ice, and rain.

The failure families that superimpose imagery over the frame need textures.
This package ships a procedurally generated pack: each asset is synthesized
from a fixed per-asset seed at a canonical resolution, so the pack is
identical on every install without bundling binary files.  Users can export
the pack to disk, or point the engine at their own directory of 4-channel
PNGs plus a manifest with the same asset ids.

Manifest format, one record per line, tab-separated::

    <id> <family> <mode> <opacity>

where mode is ``alpha`` (composite by the asset's alpha channel) or ``blend``
(uniform opacity mix), and opacity is a fraction in [0, 1] used by blend
mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .raster import ImageBuffer, SeedSpec, make_rng

# Canonical generation size; assets are resized to the target image.
ASSET_WIDTH = 512
ASSET_HEIGHT = 256

ALPHA_MODE = "alpha"
BLEND_MODE = "blend"

ASSET_COUNTS = {"broken_lens": 16, "condensation": 3, "dirty": 36, "ice": 4, "rain": 5}
_FAMILY_PREFIX = {
    "broken_lens": "brle",
    "condensation": "cond",
    "dirty": "dirty",
    "ice": "ice",
    "rain": "rain",
}


class AssetError(Exception):
    """Raised when an overlay asset or manifest cannot be resolved."""


@dataclass(frozen=True)
class OverlayAsset:
    """A 4-channel overlay texture plus its compositing mode."""

    id: str
    family: str
    pixels: np.ndarray  # (h, w, 4) uint8
    mode: str = ALPHA_MODE
    opacity: float = 1.0

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 4:
            raise AssetError(f"asset {self.id!r}: expected (h, w, 4) pixels")
        if self.mode not in (ALPHA_MODE, BLEND_MODE):
            raise AssetError(f"asset {self.id!r}: unknown mode {self.mode!r}")
        if not 0.0 <= self.opacity <= 1.0:
            raise AssetError(f"asset {self.id!r}: opacity out of [0, 1]")

    def resized(self, width: int, height: int) -> np.ndarray:
        if self.pixels.shape[0] == height and self.pixels.shape[1] == width:
            return self.pixels
        im = Image.fromarray(self.pixels, mode="RGBA")
        return np.asarray(im.resize((width, height), Image.BILINEAR))


def composite_overlay(img: ImageBuffer, asset: OverlayAsset) -> ImageBuffer:
    """Superimpose an asset over the image.

    ``alpha`` mode composites by the asset's per-pixel alpha (pixels with
    alpha 0 are untouched); ``blend`` mode mixes the asset's RGB uniformly at
    the asset opacity.  The asset is resized to the image first.
    """
    overlay = asset.resized(img.width, img.height)
    bg = img.data.astype(np.uint32)
    fg = overlay[..., :3].astype(np.uint32)
    if asset.mode == ALPHA_MODE:
        a = overlay[..., 3].astype(np.uint32)[..., None]
        num = fg * a + bg * (255 - a)
        out = ((num * 2 + 255) // 510).astype(np.uint8)
        return ImageBuffer(out)
    o = asset.opacity
    mixed = bg.astype(np.float64) * (1.0 - o) + fg.astype(np.float64) * o
    return ImageBuffer(np.clip(np.floor(mixed + 0.5), 0, 255).astype(np.uint8))


def _asset_rng(asset_id: str) -> np.random.Generator:
    return make_rng(SeedSpec(0, "overlay-asset", asset_id))


def _over(canvas: np.ndarray, layer_rgb, layer_alpha: np.ndarray) -> None:
    """Source-over composite a float RGBA layer onto the float canvas."""
    a = layer_alpha / 255.0
    out_a = a + canvas[..., 3] / 255.0 * (1.0 - a)
    for c in range(3):
        blended = layer_rgb[c] * a + canvas[..., c] * (canvas[..., 3] / 255.0) * (1.0 - a)
        canvas[..., c] = np.divide(
            blended, out_a, out=np.zeros_like(blended), where=out_a > 0
        )
    canvas[..., 3] = out_a * 255.0


def _blob_window(canvas, cx, cy, radius):
    h, w = canvas.shape[:2]
    x0, x1 = max(0, int(cx - radius) - 1), min(w, int(cx + radius) + 2)
    y0, y1 = max(0, int(cy - radius) - 1), min(h, int(cy + radius) + 2)
    if x0 >= x1 or y0 >= y1:
        return None, None
    yy, xx = np.mgrid[y0:y1, x0:x1]
    r2 = (xx - cx) ** 2 + (yy - cy) ** 2
    return canvas[y0:y1, x0:x1], r2


def _stamp_blobs(canvas, rng, count, radius_range, color_fn, alpha_range, soft=True):
    h, w = canvas.shape[:2]
    for _ in range(count):
        cx = rng.uniform(0, w)
        cy = rng.uniform(0, h)
        radius = rng.uniform(*radius_range)
        alpha_peak = rng.uniform(*alpha_range)
        window, r2 = _blob_window(canvas, cx, cy, radius)
        if window is None:
            continue
        if soft:
            profile = np.clip(1.0 - r2 / (radius * radius), 0.0, 1.0)
        else:
            profile = (r2 <= radius * radius).astype(np.float64)
        _over(window, color_fn(rng), profile * alpha_peak)


def _draw_lines(canvas, rng, count, color, width_range, alpha_range, jitter):
    h, w = canvas.shape[:2]
    layer = Image.new("L", (w, h), 0)
    draw = ImageDraw.Draw(layer)
    alpha_peak = rng.uniform(*alpha_range)
    for _ in range(count):
        x0, y0 = rng.uniform(0, w), rng.uniform(0, h)
        angle = rng.uniform(0, 2 * np.pi)
        length = rng.uniform(0.5, 1.4) * max(w, h)
        points = [(x0, y0)]
        segments = 6
        for s in range(1, segments + 1):
            t = s / segments
            px = x0 + np.cos(angle) * length * t + rng.normal(0, jitter)
            py = y0 + np.sin(angle) * length * t + rng.normal(0, jitter)
            points.append((px, py))
        draw.line(points, fill=255, width=int(rng.integers(*width_range)))
    mask = np.asarray(layer).astype(np.float64) / 255.0
    _over(canvas, color, mask * alpha_peak)


def _gen_broken_lens(rng) -> np.ndarray:
    canvas = np.zeros((ASSET_HEIGHT, ASSET_WIDTH, 4), dtype=np.float64)
    n_scratches = int(rng.integers(1, 4))
    _draw_lines(canvas, rng, n_scratches, (235.0, 235.0, 240.0), (1, 4), (120, 210), 6.0)
    # Occasional impact point with short radiating cracks.
    if rng.random() < 0.5:
        _stamp_blobs(canvas, rng, 1, (4, 10), lambda r: (245.0, 245.0, 245.0), (150, 220), soft=False)
        _draw_lines(canvas, rng, int(rng.integers(2, 5)), (230.0, 230.0, 235.0), (1, 2), (90, 160), 4.0)
    return np.clip(np.round(canvas), 0, 255).astype(np.uint8)


def _gen_condensation(rng) -> np.ndarray:
    canvas = np.zeros((ASSET_HEIGHT, ASSET_WIDTH, 4), dtype=np.float64)
    _stamp_blobs(
        canvas, rng, int(rng.integers(4, 8)),
        (60, 160), lambda r: tuple(r.uniform(205, 240, 3)), (45, 110),
    )
    return np.clip(np.round(canvas), 0, 255).astype(np.uint8)


def _gen_dirty(rng) -> np.ndarray:
    canvas = np.zeros((ASSET_HEIGHT, ASSET_WIDTH, 4), dtype=np.float64)

    def dirt_color(r):
        base = r.uniform(40, 110)
        return (base * r.uniform(0.9, 1.2), base * r.uniform(0.7, 1.0), base * r.uniform(0.5, 0.8))

    _stamp_blobs(canvas, rng, int(rng.integers(3, 7)), (20, 60), dirt_color, (60, 130))
    _stamp_blobs(canvas, rng, int(rng.integers(40, 120)), (1.5, 9), dirt_color, (90, 210), soft=False)
    return np.clip(np.round(canvas), 0, 255).astype(np.uint8)


def _gen_ice(rng) -> np.ndarray:
    canvas = np.zeros((ASSET_HEIGHT, ASSET_WIDTH, 4), dtype=np.float64)

    def ice_color(r):
        return (r.uniform(195, 230), r.uniform(210, 245), r.uniform(235, 255))

    # Large frosted patches anchored near the borders.
    h, w = ASSET_HEIGHT, ASSET_WIDTH
    for _ in range(int(rng.integers(4, 7))):
        edge = rng.integers(0, 4)
        cx = rng.uniform(0, w) if edge in (0, 1) else (0 if edge == 2 else w)
        cy = rng.uniform(0, h) if edge in (2, 3) else (0 if edge == 0 else h)
        radius = rng.uniform(0.25, 0.6) * min(w, h) * 1.6
        window, r2 = _blob_window(canvas, cx, cy, radius)
        if window is None:
            continue
        profile = np.clip(1.0 - r2 / (radius * radius), 0.0, 1.0) ** 0.7
        _over(window, ice_color(rng), profile * rng.uniform(130, 215))
    _stamp_blobs(canvas, rng, int(rng.integers(30, 70)), (1, 5), ice_color, (120, 220), soft=False)
    return np.clip(np.round(canvas), 0, 255).astype(np.uint8)


def _gen_rain(rng) -> np.ndarray:
    canvas = np.zeros((ASSET_HEIGHT, ASSET_WIDTH, 4), dtype=np.float64)

    def drop_color(r):
        base = r.uniform(150, 205)
        return (base * 0.92, base * 0.97, base)

    _stamp_blobs(canvas, rng, int(rng.integers(18, 45)), (2, 9), drop_color, (60, 150))
    # A few streaks from drops sliding on the lens.
    _draw_lines(canvas, rng, int(rng.integers(2, 6)), (170.0, 180.0, 195.0), (1, 3), (40, 90), 2.0)
    return np.clip(np.round(canvas), 0, 255).astype(np.uint8)


_GENERATORS = {
    "broken_lens": _gen_broken_lens,
    "condensation": _gen_condensation,
    "dirty": _gen_dirty,
    "ice": _gen_ice,
    "rain": _gen_rain,
}


def builtin_asset_ids() -> list[str]:
    ids = []
    for family, count in ASSET_COUNTS.items():
        prefix = _FAMILY_PREFIX[family]
        ids.extend(f"{prefix}{i:02d}" for i in range(1, count + 1))
    return ids


def _family_of(asset_id: str) -> str:
    for family, prefix in _FAMILY_PREFIX.items():
        if asset_id.startswith(prefix) and asset_id[len(prefix):].isdigit():
            return family
    raise AssetError(f"unknown asset id {asset_id!r}")


class AssetPack:
    """Resolves asset ids to :class:`OverlayAsset`, generating or loading lazily."""

    def __init__(self, directory: str | Path | None = None):
        self._dir = Path(directory) if directory is not None else None
        self._cache: dict[str, OverlayAsset] = {}
        self._manifest: dict[str, tuple[str, str, float]] | None = None
        if self._dir is not None:
            self._manifest = read_manifest(self._dir / "manifest.tsv")

    def get(self, asset_id: str) -> OverlayAsset:
        if asset_id in self._cache:
            return self._cache[asset_id]
        if self._dir is not None:
            asset = self._load_from_dir(asset_id)
        else:
            asset = self._generate(asset_id)
        self._cache[asset_id] = asset
        return asset

    def _generate(self, asset_id: str) -> OverlayAsset:
        family = _family_of(asset_id)
        pixels = _GENERATORS[family](_asset_rng(asset_id))
        return OverlayAsset(asset_id, family, pixels, ALPHA_MODE, 1.0)

    def _load_from_dir(self, asset_id: str) -> OverlayAsset:
        assert self._manifest is not None
        if asset_id not in self._manifest:
            raise AssetError(f"asset {asset_id!r} missing from manifest in {self._dir}")
        family, mode, opacity = self._manifest[asset_id]
        path = self._dir / f"{asset_id}.png"
        if not path.exists():
            raise AssetError(f"asset file missing: {path}")
        with Image.open(path) as im:
            pixels = np.asarray(im.convert("RGBA"))
        return OverlayAsset(asset_id, family, pixels, mode, opacity)


def read_manifest(path: str | Path) -> dict[str, tuple[str, str, float]]:
    path = Path(path)
    if not path.exists():
        raise AssetError(f"asset manifest missing: {path}")
    records: dict[str, tuple[str, str, float]] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise AssetError(f"{path}:{lineno}: expected 4 tab-separated fields")
        asset_id, family, mode, opacity = parts
        records[asset_id] = (family, mode, float(opacity))
    return records


def write_asset_pack(directory: str | Path) -> list[str]:
    """Export the built-in pack as PNGs plus manifest; returns written ids."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pack = AssetPack()
    lines = []
    ids = builtin_asset_ids()
    for asset_id in ids:
        asset = pack.get(asset_id)
        Image.fromarray(asset.pixels, mode="RGBA").save(
            directory / f"{asset_id}.png", format="PNG", compress_level=6
        )
        lines.append(f"{asset_id}\t{asset.family}\t{asset.mode}\t{asset.opacity:g}")
    (directory / "manifest.tsv").write_text("\n".join(lines) + "\n")
    return ids
