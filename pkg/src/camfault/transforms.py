"""Camera-failure image transforms.

Every function takes an :class:`ImageBuffer` and returns a new one, leaving
the input untouched.  Stochastic transforms draw all entropy from the
generator passed in, so outputs are fully determined by (image, parameters,
seed).  All arithmetic saturates to [0, 255]; nothing wraps.

Rounding convention throughout: half away from zero (values are
non-negative before clamping except for noise, where the sign is absorbed by
the clamp).
"""

from __future__ import annotations

import numpy as np

from .raster import ImageBuffer, saturate_u8

# Grayscale conversion weights (ITU-R BT.601 luma coefficients).
GRAY_WEIGHTS = (0.2989, 0.5870, 0.1140)

# Radial scale increments for the two chromatic-aberration levels.  Chosen so
# level-1 fringes are about 1 px and level-2 about 3 px at the corners of a
# 1242-wide frame; catalog-documented constants, not calibrated values.
ABERRATION_DELTAS = {1: 0.004, 2: 0.010}

# Stripe geometry for the two banding patterns: (period px, duty cycle,
# blend opacity, include vertical stripes).
BANDING_PATTERNS = {
    1: (24, 0.25, 0.5, False),
    2: (16, 0.20, 0.4, True),
}

# 3x3 smoothing kernel used as the reference image for sharpness scaling:
# center weight 5, neighbors 1, normalized by 13.
_SMOOTH_CENTER = 5
_SMOOTH_NORM = 13

DEAD_PIXEL_MODES = ("n1", "n50", "n200", "n500", "vcl", "3l")


def _reflect_pad(plane: np.ndarray, before: int, after: int) -> np.ndarray:
    """Mirror-pad rows and columns about the edge sample (no edge repeat)."""
    if before == 0 and after == 0:
        return plane
    # np.pad 'reflect' mirrors without repeating the edge; a 1-wide axis has
    # no neighbor to mirror, so fall back to replication (equivalent under
    # reflection of a single sample).
    pad = ((before, after), (before, after), (0, 0))
    if plane.shape[0] > 1 and plane.shape[1] > 1:
        return np.pad(plane, pad, mode="reflect")
    return np.pad(plane, pad, mode="edge")


def _window_sums(img: np.ndarray, k: int) -> np.ndarray:
    """Exact integer k x k window sums per channel with mirrored borders."""
    before = k // 2
    after = k - 1 - before
    padded = _reflect_pad(img.astype(np.int64), before, after)
    # Integral image with a zero border row/column.
    integral = np.zeros(
        (padded.shape[0] + 1, padded.shape[1] + 1, 3), dtype=np.int64
    )
    np.cumsum(padded, axis=0, out=integral[1:, 1:])
    np.cumsum(integral[1:, 1:], axis=1, out=integral[1:, 1:])
    h, w = img.shape[:2]
    return (
        integral[k : k + h, k : k + w]
        - integral[0:h, k : k + w]
        - integral[k : k + h, 0:w]
        + integral[0:h, 0:w]
    )


def blur(img: ImageBuffer, k: int) -> ImageBuffer:
    """Box blur: each sample becomes the rounded mean of its k x k window.

    Border samples are mirrored about the edge.  k=1 is the identity.
    """
    if not 1 <= k <= 25:
        raise ValueError(f"blur level must be in [1, 25], got {k}")
    if k == 1:
        return img
    sums = _window_sums(img.data, k)
    area = k * k
    # Integer round-half-up of sums/area.
    out = (sums * 2 + area) // (2 * area)
    return ImageBuffer(out.astype(np.uint8))


def brightness(img: ImageBuffer, factor: float) -> ImageBuffer:
    """Scale every sample by ``factor`` with saturation; 0 blacks the image."""
    if factor < 0:
        raise ValueError(f"brightness factor must be >= 0, got {factor}")
    if factor == 1.0:
        return img
    return ImageBuffer(saturate_u8(img.data.astype(np.float64) * factor))


def banding(img: ImageBuffer, pattern: int, opacity: float | None = None) -> ImageBuffer:
    """Blend dark parallel stripes over the image.

    Pattern 1 is horizontal stripes; pattern 2 adds a vertical grid.  Stripe
    geometry is procedural and seedless, so both patterns are deterministic.
    """
    try:
        period, duty, default_opacity, with_vertical = BANDING_PATTERNS[pattern]
    except KeyError:
        raise ValueError(f"banding pattern must be 1 or 2, got {pattern}") from None
    alpha = default_opacity if opacity is None else float(opacity)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"banding opacity must be in [0, 1], got {alpha}")
    if alpha == 0.0:
        return img
    stripe_width = max(1, round(period * duty))
    rows = (np.arange(img.height) % period) < stripe_width
    mask = np.repeat(rows[:, None], img.width, axis=1)
    if with_vertical:
        cols = (np.arange(img.width) % period) < stripe_width
        mask = mask | cols[None, :]
    out = img.data.astype(np.float64)
    out[mask] *= 1.0 - alpha
    return ImageBuffer(saturate_u8(out))


def stripe_mask(width: int, height: int, pattern: int) -> np.ndarray:
    """Boolean mask of the pixels darkened by a banding pattern."""
    period, duty, _, with_vertical = BANDING_PATTERNS[pattern]
    stripe_width = max(1, round(period * duty))
    rows = (np.arange(height) % period) < stripe_width
    mask = np.repeat(rows[:, None], width, axis=1)
    if with_vertical:
        cols = (np.arange(width) % period) < stripe_width
        mask = mask | cols[None, :]
    return mask


def dead_pixels(
    img: ImageBuffer, mode: str, rng: np.random.Generator | None = None
) -> ImageBuffer:
    """Force photosites to (0,0,0).

    Modes: ``n1`` blacks the bottom-right pixel; ``n50``/``n200``/``n500``
    black that many distinct pixels drawn from ``rng`` (capped at the pixel
    count for tiny images); ``vcl`` blacks the center column; ``3l`` blacks
    two horizontal lines at h/3 and 2h/3 plus the center column.
    """
    if mode not in DEAD_PIXEL_MODES:
        raise ValueError(f"unknown dead-pixel mode {mode!r}")
    if img.width < 3 or img.height < 3:
        raise ValueError("dead_pixels requires an image of at least 3x3")
    out = img.data.copy()
    w, h = img.width, img.height
    if mode == "n1":
        out[h - 1, w - 1] = 0
    elif mode in ("n50", "n200", "n500"):
        if rng is None:
            raise ValueError(f"mode {mode!r} is stochastic and needs a generator")
        count = min(int(mode[1:]), w * h)
        flat = rng.permutation(w * h)[:count]
        out.reshape(-1, 3)[flat] = 0
    elif mode == "vcl":
        out[:, w // 2] = 0
    else:  # 3l
        out[h // 3, :] = 0
        out[2 * h // 3, :] = 0
        out[:, w // 2] = 0
    return ImageBuffer(out)


def no_bayer(img: ImageBuffer, mode: str = "luminance") -> ImageBuffer:
    """Suppress the color mosaic.

    ``luminance`` (default) replaces every pixel with its BT.601 luma,
    producing an achromatic image.  ``channel_scale`` multiplies each channel
    by its luma coefficient instead (a literal per-channel attenuation).
    """
    wr, wg, wb = GRAY_WEIGHTS
    data = img.data.astype(np.float64)
    if mode == "luminance":
        y = data[..., 0] * wr + data[..., 1] * wg + data[..., 2] * wb
        out = np.repeat(saturate_u8(y)[..., None], 3, axis=2)
        return ImageBuffer(out)
    if mode == "channel_scale":
        return ImageBuffer(saturate_u8(data * np.array([wr, wg, wb])))
    raise ValueError(f"unknown no_bayer mode {mode!r}")


def demosaic_raw(img: ImageBuffer) -> ImageBuffer:
    """Re-expand the image into its raw BGGR photosite mosaic.

    The output is 2w x 2h: each source pixel becomes a 2x2 cell whose
    top-left site keeps only the blue value, top-right and bottom-left only
    the green value, and bottom-right only the red value.  The two non-native
    channels of every photosite are zero.
    """
    h, w = img.height, img.width
    out = np.zeros((2 * h, 2 * w, 3), dtype=np.uint8)
    data = img.data
    out[0::2, 0::2, 2] = data[:, :, 2]  # B at top-left
    out[0::2, 1::2, 1] = data[:, :, 1]  # G at top-right
    out[1::2, 0::2, 1] = data[:, :, 1]  # G at bottom-left
    out[1::2, 1::2, 0] = data[:, :, 0]  # R at bottom-right
    return ImageBuffer(out)


def speckle_noise(
    img: ImageBuffer, sigma: float, rng: np.random.Generator
) -> ImageBuffer:
    """Multiplicative speckle: out = in + in * n with n ~ Normal(0, sigma).

    Noise is drawn independently per sample.  An additive variant
    (out = in + 255 * n) is available via :func:`additive_noise`.
    """
    if sigma <= 0:
        raise ValueError(f"noise sigma must be positive, got {sigma}")
    data = img.data.astype(np.float64)
    noise = rng.normal(0.0, sigma, size=data.shape)
    return ImageBuffer(saturate_u8(data + data * noise))


def additive_noise(
    img: ImageBuffer, sigma: float, rng: np.random.Generator
) -> ImageBuffer:
    """Additive Gaussian noise in sample units: out = in + 255 * n."""
    if sigma <= 0:
        raise ValueError(f"noise sigma must be positive, got {sigma}")
    data = img.data.astype(np.float64)
    noise = rng.normal(0.0, sigma, size=data.shape)
    return ImageBuffer(saturate_u8(data + 255.0 * noise))


def _smooth_reference(data: np.ndarray) -> np.ndarray:
    """13x-scaled 3x3 weighted smoothing (center 5, neighbors 1), mirrored
    borders.  Returned unnormalized so callers can stay in exact integers."""
    padded = _reflect_pad(data.astype(np.int64), 1, 1)
    total = _window_sums_from_padded(padded, data.shape)
    center = data.astype(np.int64)
    # total is the 3x3 sum including the center once; add 4 more centers to
    # weight it 5.
    return total + (_SMOOTH_CENTER - 1) * center


def _window_sums_from_padded(padded: np.ndarray, shape) -> np.ndarray:
    h, w = shape[:2]
    sums = np.zeros((h, w, 3), dtype=np.int64)
    for dy in range(3):
        for dx in range(3):
            sums += padded[dy : dy + h, dx : dx + w]
    return sums


def sharpness(img: ImageBuffer, factor: float) -> ImageBuffer:
    """Interpolate between a smoothed image and the input.

    out = S + factor * (I - S), where S is the 5/13-center 3x3 smoothing of
    the input.  factor 1 returns the input, factor 0 the smoothed image, and
    negative factors push past the smoothing (loss of sharpness).
    """
    if factor == 1.0:
        return img
    smooth13 = _smooth_reference(img.data)
    data = img.data.astype(np.int64)
    # out = (smooth13 + factor * (13*I - smooth13)) / 13, rounded half up.
    values = (smooth13 + factor * (data * _SMOOTH_NORM - smooth13)) / _SMOOTH_NORM
    return ImageBuffer(saturate_u8(values))


def _radial_sample_coords(
    width: int, height: int, scale: float
) -> tuple[np.ndarray, np.ndarray]:
    """Source coordinates that magnify the plane by ``scale`` about center."""
    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0
    xs = (np.arange(width) - cx) / scale + cx
    ys = (np.arange(height) - cy) / scale + cy
    return np.meshgrid(xs, ys)


def _bilinear_plane(plane: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear sampling of a single channel with clamp-to-edge."""
    h, w = plane.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    p = plane.astype(np.float64)
    top = p[y0, x0] * (1 - fx) + p[y0, x1] * fx
    bottom = p[y1, x0] * (1 - fx) + p[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def chromatic_aberration(
    img: ImageBuffer,
    level: int = 1,
    with_blur: bool = False,
    delta: float | None = None,
) -> ImageBuffer:
    """Lateral chromatic aberration: colored fringes from channel misregistration.

    The red channel is radially magnified by (1 + d) about the image center
    and the blue channel shrunk by (1 - d), both with bilinear resampling;
    green is untouched.  ``delta`` overrides the level constant (0 is the
    identity).  ``with_blur`` follows with a k=3 box blur.
    """
    if delta is None:
        try:
            delta = ABERRATION_DELTAS[level]
        except KeyError:
            raise ValueError(f"aberration level must be 1 or 2, got {level}") from None
    if delta == 0.0 and not with_blur:
        return img
    out = img.data.copy()
    if delta != 0.0:
        xs_r, ys_r = _radial_sample_coords(img.width, img.height, 1.0 + delta)
        xs_b, ys_b = _radial_sample_coords(img.width, img.height, 1.0 - delta)
        out[..., 0] = saturate_u8(_bilinear_plane(img.data[..., 0], xs_r, ys_r))
        out[..., 2] = saturate_u8(_bilinear_plane(img.data[..., 2], xs_b, ys_b))
    result = ImageBuffer(out)
    if with_blur:
        result = blur(result, 3)
    return result


def flare(
    img: ImageBuffer,
    rng: np.random.Generator,
    geometry: list | None = None,
) -> ImageBuffer:
    """Lens flare: a bright source disc plus translucent ghost circles.

    The source position and the ghost axis angle are drawn from ``rng``; the
    ghost circles are placed along the line through the source at that angle.
    All discs are additive, so mean luminance can only go up.  When
    ``geometry`` is a list, one (cx, cy, radius) tuple per disc is appended
    for inspection.
    """
    w, h = img.width, img.height
    sx = rng.uniform(0.2 * w, 0.8 * w)
    sy = rng.uniform(0.2 * h, 0.8 * h)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    direction = np.array([np.cos(angle), np.sin(angle)])
    scale = min(w, h)

    acc = img.data.astype(np.float64)
    yy, xx = np.mgrid[0:h, 0:w]

    def add_disc(cx: float, cy: float, radius: float, color, strength: float):
        r2 = (xx - cx) ** 2 + (yy - cy) ** 2
        # Smooth quadratic falloff to the rim.
        profile = np.clip(1.0 - r2 / (radius * radius), 0.0, 1.0)
        for c in range(3):
            acc[..., c] += strength * color[c] * profile
        if geometry is not None:
            geometry.append((cx, cy, radius))

    add_disc(sx, sy, max(2.0, 0.10 * scale), (255.0, 250.0, 235.0), 1.0)
    n_ghosts = int(rng.integers(4, 8))
    t = 0.0
    for _ in range(n_ghosts):
        t += rng.uniform(0.18, 0.45) * scale
        cx, cy = sx + t * direction[0], sy + t * direction[1]
        radius = max(2.0, rng.uniform(0.03, 0.08) * scale)
        tint = rng.uniform(0.5, 1.0, size=3) * 255.0
        add_disc(cx, cy, radius, tint, rng.uniform(0.15, 0.35))
    return ImageBuffer(saturate_u8(acc))
