"""The named failure-configuration catalog and its dispatcher.

130 presets across 15 families.  Each preset is a fully parameterized,
reproducible image transform; stochastic presets derive their entropy from
(global seed, image id, preset name), nothing else.
"""

from __future__ import annotations

import difflib
import enum
from dataclasses import dataclass, field
from typing import Mapping

from . import transforms
from .assets import AssetPack, composite_overlay
from .raster import ImageBuffer, SeedSpec, make_rng


class Family(str, enum.Enum):
    BANDING = "Banding"
    BLUR = "Blur"
    BRIGHTNESS = "Brightness"
    BROKEN_LENS = "BrokenLens"
    CONDENSATION = "Condensation"
    DIRTY = "Dirty"
    ICE = "Ice"
    RAIN = "Rain"
    DEAD_PIXEL = "DeadPixel"
    FLARE = "Flare"
    NO_BAYER_FILTER = "NoBayerFilter"
    CHROMATIC_ABERRATION = "ChromaticAberration"
    NO_DEMOSAICING = "NoDemosaicing"
    NOISE = "Noise"
    SHARPNESS = "Sharpness"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


# Family sizes of the full catalog; the catalog builder is checked against
# this at import time.
FAMILY_COUNTS = {
    Family.BANDING: 2,
    Family.BLUR: 25,
    Family.BRIGHTNESS: 10,
    Family.BROKEN_LENS: 16,
    Family.CONDENSATION: 3,
    Family.DIRTY: 36,
    Family.ICE: 4,
    Family.RAIN: 5,
    Family.DEAD_PIXEL: 6,
    Family.FLARE: 1,
    Family.NO_BAYER_FILTER: 1,
    Family.CHROMATIC_ABERRATION: 4,
    Family.NO_DEMOSAICING: 1,
    Family.NOISE: 10,
    Family.SHARPNESS: 6,
}

# Brightness multipliers.  0, 0.6, 1.5 and 15 are the documented anchor
# values; the rest fill the range and are flagged interpolated.
BRIGHTNESS_LEVELS = (0, 0.3, 0.6, 1.5, 2, 3, 5, 7, 10, 15)
_BRIGHTNESS_ANCHORS = {0, 0.6, 1.5, 15}

# Speckle sigma values; 0.2 and 5 are the documented endpoints.
NOISE_SIGMAS = (0.2, 0.5, 0.8, 1, 1.5, 2, 2.5, 3, 4, 5)
_NOISE_ANCHORS = {0.2, 5}

SHARPNESS_FACTORS = (0, -1, -2, -3, -4, -5)
# Registered as an extra alias outside the 130-entry catalog.
SHARPNESS_EXTRA = -3.5


class PresetError(Exception):
    """Raised for unknown preset names or undispatchable parameters."""


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class FailurePreset:
    name: str
    family: Family
    params: Mapping = field(default_factory=dict)
    stochastic: bool = False

    def params_text(self) -> str:
        return ",".join(f"{k}={_fmt(self.params[k])}" for k in sorted(self.params))


def _num(value: float):
    # Collapse whole floats to ints so names read BRIGHT_2, not BRIGHT_2.0.
    return int(value) if float(value) == int(value) else float(value)


def _level_name(prefix: str, value) -> str:
    return f"{prefix}_{_num(value):g}"


def _build_catalog() -> list[FailurePreset]:
    presets: list[FailurePreset] = []
    for pattern in (1, 2):
        period, duty, opacity, _ = transforms.BANDING_PATTERNS[pattern]
        presets.append(
            FailurePreset(
                f"BAND{pattern}",
                Family.BANDING,
                {"pattern": pattern, "period": period, "duty": duty, "opacity": opacity},
            )
        )
    presets.extend(
        FailurePreset(f"BLUR_{k}", Family.BLUR, {"k": k}) for k in range(1, 26)
    )
    for level in BRIGHTNESS_LEVELS:
        params = {"factor": _num(level)}
        if level not in _BRIGHTNESS_ANCHORS:
            params["interpolated"] = True
        presets.append(FailurePreset(_level_name("BRIGHT", level), Family.BRIGHTNESS, params))
    presets.extend(
        FailurePreset(f"BRLE{i}", Family.BROKEN_LENS, {"asset": f"brle{i:02d}"})
        for i in range(1, 17)
    )
    presets.extend(
        FailurePreset(f"COND{i}", Family.CONDENSATION, {"asset": f"cond{i:02d}"})
        for i in range(1, 4)
    )
    presets.extend(
        FailurePreset(f"DIRTY{i}", Family.DIRTY, {"asset": f"dirty{i:02d}"})
        for i in range(1, 37)
    )
    presets.extend(
        FailurePreset(f"ICE{i}", Family.ICE, {"asset": f"ice{i:02d}"})
        for i in range(1, 5)
    )
    presets.extend(
        FailurePreset(f"RAIN{i}", Family.RAIN, {"asset": f"rain{i:02d}"})
        for i in range(1, 6)
    )
    for count in (1, 50, 200, 500):
        presets.append(
            FailurePreset(
                f"DEAPIX{count}",
                Family.DEAD_PIXEL,
                {"mode": f"n{count}"},
                stochastic=count > 1,
            )
        )
    presets.append(FailurePreset("DEAPIX-vcl", Family.DEAD_PIXEL, {"mode": "vcl"}))
    presets.append(FailurePreset("DEAPIX-3l", Family.DEAD_PIXEL, {"mode": "3l"}))
    presets.append(FailurePreset("FLARE", Family.FLARE, {}, stochastic=True))
    presets.append(
        FailurePreset("NBAYF", Family.NO_BAYER_FILTER, {"mode": "luminance"})
    )
    for level in (1, 2):
        for blurred in (True, False):
            suffix = "b" if blurred else "nb"
            presets.append(
                FailurePreset(
                    f"CHROMAB{level}-{suffix}",
                    Family.CHROMATIC_ABERRATION,
                    {
                        "level": level,
                        "blur": blurred,
                        "delta": transforms.ABERRATION_DELTAS[level],
                    },
                )
            )
    presets.append(FailurePreset("DEMOS", Family.NO_DEMOSAICING, {}))
    for sigma in NOISE_SIGMAS:
        params = {"sigma": _num(sigma)}
        if sigma not in _NOISE_ANCHORS:
            params["interpolated"] = True
        presets.append(
            FailurePreset(_level_name("NOISE", sigma), Family.NOISE, params, stochastic=True)
        )
    presets.extend(
        FailurePreset(_level_name("SHARP", f), Family.SHARPNESS, {"factor": _num(f)})
        for f in SHARPNESS_FACTORS
    )
    return presets


_CATALOG: list[FailurePreset] = _build_catalog()
_BY_NAME: dict[str, FailurePreset] = {p.name: p for p in _CATALOG}

# Aliases resolvable by name without counting toward the 130-entry catalog.
_ALIASES: dict[str, FailurePreset] = {
    _level_name("SHARP", SHARPNESS_EXTRA): FailurePreset(
        _level_name("SHARP", SHARPNESS_EXTRA),
        Family.SHARPNESS,
        {"factor": SHARPNESS_EXTRA},
    ),
}

assert len(_CATALOG) == 130, len(_CATALOG)
assert len(_BY_NAME) == 130, "duplicate preset names"
for _family, _count in FAMILY_COUNTS.items():
    assert sum(p.family is _family for p in _CATALOG) == _count, _family


def preset_catalog() -> list[FailurePreset]:
    """All 130 presets, in canonical (family-grouped) order."""
    return list(_CATALOG)


def preset_names() -> list[str]:
    return [p.name for p in _CATALOG]


def get_preset(name: str) -> FailurePreset:
    """Resolve a preset by exact name; aliases included."""
    if name in _BY_NAME:
        return _BY_NAME[name]
    if name in _ALIASES:
        return _ALIASES[name]
    candidates = list(_BY_NAME) + list(_ALIASES)
    close = difflib.get_close_matches(name, candidates, n=1)
    hint = f" (did you mean {close[0]!r}?)" if close else ""
    raise PresetError(f"unknown preset {name!r}{hint}")


def apply(
    preset: FailurePreset | str,
    img: ImageBuffer,
    seed: SeedSpec | None = None,
    asset_pack: AssetPack | None = None,
) -> ImageBuffer:
    """Apply one failure preset to an image.

    Deterministic given (image, preset, seed): stochastic presets seed their
    generator from (seed.global_seed, seed.image_id, preset name).  Overlay
    presets resolve their texture through ``asset_pack`` (the built-in pack
    when omitted).
    """
    if isinstance(preset, str):
        preset = get_preset(preset)
    seed = seed or SeedSpec()
    rng = None
    if preset.stochastic:
        rng = make_rng(SeedSpec(seed.global_seed, seed.image_id, preset.name))
    family = preset.family
    p = preset.params
    if family is Family.BANDING:
        return transforms.banding(img, p["pattern"], p.get("opacity"))
    if family is Family.BLUR:
        return transforms.blur(img, p["k"])
    if family is Family.BRIGHTNESS:
        return transforms.brightness(img, p["factor"])
    if family in (Family.BROKEN_LENS, Family.CONDENSATION, Family.DIRTY, Family.ICE, Family.RAIN):
        pack = asset_pack or _default_pack()
        return composite_overlay(img, pack.get(p["asset"]))
    if family is Family.DEAD_PIXEL:
        return transforms.dead_pixels(img, p["mode"], rng)
    if family is Family.FLARE:
        return transforms.flare(img, rng)
    if family is Family.NO_BAYER_FILTER:
        return transforms.no_bayer(img, p["mode"])
    if family is Family.CHROMATIC_ABERRATION:
        return transforms.chromatic_aberration(img, p["level"], p["blur"], p.get("delta"))
    if family is Family.NO_DEMOSAICING:
        return transforms.demosaic_raw(img)
    if family is Family.NOISE:
        return transforms.speckle_noise(img, p["sigma"], rng)
    if family is Family.SHARPNESS:
        return transforms.sharpness(img, p["factor"])
    raise PresetError(f"no dispatch for family {family}")  # pragma: no cover


_PACK: AssetPack | None = None


def _default_pack() -> AssetPack:
    global _PACK
    if _PACK is None:
        _PACK = AssetPack()
    return _PACK


def expand_selection(patterns: list[str]) -> list[str]:
    """Resolve preset names and ``fnmatch`` globs against the catalog.

    Returns catalog-ordered, de-duplicated names.  A pattern that matches
    nothing (and is not an alias) is an error.
    """
    import fnmatch

    selected: set[str] = set()
    for pattern in patterns:
        if pattern in _BY_NAME or pattern in _ALIASES:
            selected.add(pattern)
            continue
        hits = fnmatch.filter(preset_names(), pattern)
        if not hits:
            raise PresetError(f"preset pattern {pattern!r} matches nothing in the catalog")
        selected.update(hits)
    ordered = [n for n in preset_names() if n in selected]
    ordered.extend(sorted(n for n in selected if n not in _BY_NAME))
    return ordered


def catalog_to_text(presets: list[FailurePreset] | None = None) -> str:
    """Serialize presets as one tab-separated record per line.

    Format: ``name<TAB>family<TAB>key=value,...`` with keys sorted.  The
    output round-trips through :func:`catalog_from_text`.
    """
    presets = presets if presets is not None else preset_catalog()
    lines = [f"{p.name}\t{p.family.value}\t{p.params_text()}" for p in presets]
    return "\n".join(lines) + "\n"


def _parse_value(text: str):
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def catalog_from_text(text: str) -> list[FailurePreset]:
    presets = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 3:
            raise PresetError(f"line {lineno}: expected 3 tab-separated fields")
        name, family_text, params_text = parts
        try:
            family = Family(family_text)
        except ValueError:
            raise PresetError(f"line {lineno}: unknown family {family_text!r}") from None
        params = {}
        if params_text:
            for item in params_text.split(","):
                key, _, value = item.partition("=")
                params[key] = _parse_value(value)
        stochastic = _BY_NAME[name].stochastic if name in _BY_NAME else False
        presets.append(FailurePreset(name, family, params, stochastic))
    return presets
