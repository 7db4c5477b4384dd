"""Machine-readable FMEA registry of vehicle-camera failure modes.

26 records, one per identified failure mode, each apportioned to the camera
components where it manifests (lens, camera body, Bayer filter, image
sensor, ISP), with an effect summary, mitigation notes, and its simulation
status: mapped to a transform family, grouped into another mode with the
same visual effect, or excluded with a recorded reason.

The registry is compiled-in data, not configuration: it is fixed content
that the preset catalog and reports reference by name.
"""

from __future__ import annotations

import difflib
import enum
from dataclasses import dataclass

from .presets import Family


class Component(str, enum.Enum):
    LENS = "Lens"
    CAMERA_BODY = "CameraBody"
    BAYER_FILTER = "BayerFilter"
    IMAGE_SENSOR = "ImageSensor"
    ISP = "ISP"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


SIMULATED = "simulated"
GROUPED = "grouped"
NOT_SIMULATED = "not_simulated"

# Canonical exclusion reasons; the registry uses exactly these strings.
REASON_NO_OUTPUT = "does not produce an output image"
REASON_NOT_UNIVOCAL = "effect on the image is not univocal"
REASON_RARE = "too rare for vehicle cameras"
REASON_NO_WIDE_ANGLE = "needs wide-angle optics absent from the source imagery"


class TaxonomyError(Exception):
    """Raised for unknown failure-mode names."""


@dataclass(frozen=True)
class FailureModeRecord:
    name: str
    components: frozenset[Component]
    effect_summary: str
    mitigation_notes: str
    status: str  # SIMULATED | GROUPED | NOT_SIMULATED
    family: Family | None = None  # set when status == SIMULATED
    grouped_into: str | None = None  # set when status == GROUPED
    reason: str | None = None  # set when status == NOT_SIMULATED

    def __post_init__(self):
        if not self.components:
            raise ValueError(f"{self.name}: empty component set")
        expectations = {
            SIMULATED: self.family is not None,
            GROUPED: self.grouped_into is not None,
            NOT_SIMULATED: self.reason is not None,
        }
        if not expectations.get(self.status, False):
            raise ValueError(f"{self.name}: inconsistent simulation status")


def _rec(name, components, effect, mitigation, status, **kw) -> FailureModeRecord:
    return FailureModeRecord(
        name, frozenset(components), effect, mitigation, status, **kw
    )


_L = Component.LENS
_CB = Component.CAMERA_BODY
_BF = Component.BAYER_FILTER
_IS = Component.IMAGE_SENSOR
_ISP = Component.ISP

_REGISTRY: list[FailureModeRecord] = [
    _rec(
        "Banding", {_IS},
        "Parallel dark lines become visible across the frame, most clearly on dark tones.",
        "Dithering patterns reduce the visibility of banding.",
        SIMULATED, family=Family.BANDING,
    ),
    _rec(
        "Blurred", {_L},
        "The captured frame is out of focus and fine detail is lost.",
        "Blind deblurring and kernel-estimation methods can restore focus in post-processing.",
        SIMULATED, family=Family.BLUR,
    ),
    _rec(
        "Brackish/Salt-Water", {_L, _CB},
        "Salt corrosion degrades lens and housing; once agents enter the body, the image "
        "can be altered in any of the ways the other modes describe.",
        "Anti-corrosion treatments for surfaces exposed to seawater or brackish water.",
        NOT_SIMULATED, reason=REASON_NOT_UNIVOCAL,
    ),
    _rec(
        "Bright Lines", {_IS},
        "Bright vertical or horizontal lines appear after the sensor is damaged by "
        "intense light sources such as LIDAR emitters.",
        "Largely addressed by current sensor technology; occurrences are now uncommon.",
        NOT_SIMULATED, reason=REASON_RARE,
    ),
    _rec(
        "Brightness", {_L},
        "Exposure swings between all-black and all-white when the shutter, diaphragm, "
        "or iris stops metering light correctly.",
        "Detectable and partly correctable in post-processing; fully black or white "
        "frames are easy to detect but hard to recover.",
        SIMULATED, family=Family.BRIGHTNESS,
    ),
    _rec(
        "Broken Lens", {_L},
        "A cracked or scratched element overlays line or shatter patterns on the scene.",
        "Detectable through image processing; recovering a clean image is difficult.",
        SIMULATED, family=Family.BROKEN_LENS,
    ),
    _rec(
        "Broken VR", {_L},
        "A failed vibration-reduction unit produces out-of-focus frames.",
        "Same recovery methods as for focus blur.",
        GROUPED, grouped_into="Blurred",
    ),
    _rec(
        "Condensation", {_L, _CB},
        "Humidity forms halos on the optics; moisture inside the body can stop the device.",
        "Heated or sealed housings keep condensation off the optics and out of the body.",
        SIMULATED, family=Family.CONDENSATION,
    ),
    _rec(
        "Dead Pixel", {_IS},
        "Stuck photosites render as black dots; isolated ones are benign, large counts "
        "degrade downstream processing.",
        "Dead photosites can be detected on-device and corrected by dedicated circuits.",
        SIMULATED, family=Family.DEAD_PIXEL,
    ),
    _rec(
        "Dirty", {_L},
        "Dust and debris on internal or external elements occlude parts of the scene; "
        "external deposits are cleanable, internal ones need servicing.",
        "Single-image methods remove localized dirt and thin occluders.",
        SIMULATED, family=Family.DIRTY,
    ),
    _rec(
        "Electrical Overload", {_CB},
        "Overheated conductors damage the electronics; frames are produced wrongly or "
        "not at all.",
        "Prevention through reliable control circuits, sensors, and proper casing.",
        NOT_SIMULATED, reason=REASON_NO_OUTPUT,
    ),
    _rec(
        "Flare", {_L},
        "Internal reflections of a strong light source print colored spots along a "
        "line, covering scene detail.",
        "Flare and ghosting can be reduced in post-processing; coated, spaced lens "
        "elements limit it at capture time.",
        SIMULATED, family=Family.FLARE,
    ),
    _rec(
        "Heat", {_L, _CB},
        "Excess heat can evaporate lubricants and seize focus or zoom; resulting image "
        "alterations vary case by case.",
        "Ruggedized cameras rated for extreme temperatures.",
        NOT_SIMULATED, reason=REASON_NOT_UNIVOCAL,
    ),
    _rec(
        "Ice", {_L, _CB},
        "Ice sheets over the optics block acquisition and can crack external materials.",
        "Lens heaters prevent or reduce icing and condensation.",
        SIMULATED, family=Family.ICE,
    ),
    _rec(
        "No Action", {_ISP},
        "The ISP stops responding: the raw capture is never processed and nothing is "
        "transmitted downstream.",
        "Easy to detect at system level; the image itself cannot be recovered.",
        NOT_SIMULATED, reason=REASON_NO_OUTPUT,
    ),
    _rec(
        "No Bayer Filter", {_BF},
        "Without a working color mosaic the output loses chroma; downstream stages "
        "process chromatically wrong frames.",
        "Prevention through reliable sensor assemblies and casing.",
        SIMULATED, family=Family.NO_BAYER_FILTER,
    ),
    _rec(
        "No Chromatic Aberration Correction", {_ISP},
        "Wavelength-dependent refraction leaves colored fringes, mostly at edges, with "
        "a slight blur.",
        "Digital removal of chromatic aberration from single frames.",
        SIMULATED, family=Family.CHROMATIC_ABERRATION,
    ),
    _rec(
        "No Demosaicing", {_ISP},
        "The frame stays in raw mosaic form, one color sample per photosite.",
        "Efficient demosaicing algorithms exist, but an image that skipped them is "
        "hard to reconstruct downstream.",
        SIMULATED, family=Family.NO_DEMOSAICING,
    ),
    _rec(
        "No Lens Distortion Correction", {_ISP},
        "Wide-angle geometric distortion stays in the frame, or processing stalls on it.",
        "Distortion is measurable and correctable with image processing.",
        NOT_SIMULATED, reason=REASON_NO_WIDE_ANGLE,
    ),
    _rec(
        "No Noise Reduction", {_ISP},
        "Sensor noise passes through to the output frame.",
        "Denoising is available in post-processing and at sensor level.",
        SIMULATED, family=Family.NOISE,
    ),
    _rec(
        "No Sharpness", {_ISP},
        "Edge definition between contiguous areas of different brightness or color is lost.",
        "Sharpening solutions are widely available, including commercial tools.",
        SIMULATED, family=Family.SHARPNESS,
    ),
    _rec(
        "Rain", {_L},
        "Water drops on the external element spot the image.",
        "Same single-image removal methods as for dirt deposits.",
        SIMULATED, family=Family.RAIN,
    ),
    _rec(
        "Sand", {_L, _CB},
        "Abrasive, salty grains corrode and jam focus or zoom mechanics; on the lens it "
        "reads like dirt.",
        "Prevention with proper casing of the camera.",
        NOT_SIMULATED, reason=REASON_NOT_UNIVOCAL,
    ),
    _rec(
        "Spots", {_IS},
        "Dust settling on the sensor itself shows as small, mostly circular shadows "
        "over light areas.",
        "Blemish detection and automatic dust correction in processing pipelines.",
        GROUPED, grouped_into="Dirty",
    ),
    _rec(
        "Water", {_L, _CB},
        "Water ingress fails the electronics; frames stop or arrive without content.",
        "Prevention with proper casing of the camera.",
        NOT_SIMULATED, reason=REASON_NO_OUTPUT,
    ),
    _rec(
        "Wind", {_L, _CB},
        "Wind-driven stress opens cavities, letting agents in; frames may come out "
        "shifted or cut.",
        "Prevention with proper casing of the camera.",
        NOT_SIMULATED, reason=REASON_RARE,
    ),
]

_BY_KEY = {r.name.casefold(): r for r in _REGISTRY}


def load_registry() -> list[FailureModeRecord]:
    """All 26 failure-mode records, alphabetical by name."""
    return list(_REGISTRY)


def lookup(name: str) -> FailureModeRecord:
    """Case-insensitive exact-name lookup with a nearest-name hint on miss."""
    record = _BY_KEY.get(name.casefold())
    if record is not None:
        return record
    close = difflib.get_close_matches(
        name.casefold(), list(_BY_KEY), n=1, cutoff=0.3
    )
    hint = f" (did you mean {_BY_KEY[close[0]].name!r}?)" if close else ""
    raise TaxonomyError(f"unknown failure mode {name!r}{hint}")


def list_by_component(component: Component | str) -> list[FailureModeRecord]:
    component = Component(component) if not isinstance(component, Component) else component
    return [r for r in _REGISTRY if component in r.components]


def _status_detail(record: FailureModeRecord) -> str:
    if record.status == SIMULATED:
        return record.family.value
    if record.status == GROUPED:
        return record.grouped_into
    return record.reason


def registry_to_tsv(records: list[FailureModeRecord] | None = None) -> str:
    """One record per line: name, components, status, family/target/reason."""
    records = records if records is not None else load_registry()
    lines = []
    for r in records:
        comps = ",".join(sorted(c.value for c in r.components))
        lines.append(f"{r.name}\t{comps}\t{r.status}\t{_status_detail(r)}")
    return "\n".join(lines) + "\n"


def registry_report(records: list[FailureModeRecord] | None = None) -> str:
    """Human-readable registry dump."""
    records = records if records is not None else load_registry()
    blocks = []
    for r in records:
        comps = ", ".join(sorted(c.value for c in r.components))
        if r.status == SIMULATED:
            status = f"simulated via the {r.family.value} transform family"
        elif r.status == GROUPED:
            status = f"grouped into {r.grouped_into!r} (same visual effect)"
        else:
            status = f"not simulated: {r.reason}"
        blocks.append(
            f"{r.name}\n"
            f"  components: {comps}\n"
            f"  effect:     {r.effect_summary}\n"
            f"  mitigation: {r.mitigation_notes}\n"
            f"  status:     {status}"
        )
    return "\n\n".join(blocks) + "\n"
