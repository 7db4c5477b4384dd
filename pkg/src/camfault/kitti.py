"""Reader/writer for KITTI-format ground-truth labels and detection files.

One object per non-empty line, whitespace-separated.  Ground-truth lines
have 15 fields::

    class trunc occl alpha left top right bottom height width length x y z ry

Detection lines carry a trailing confidence score (16 fields); a reduced
6-field form (class, box, score) is accepted behind a flag.  Degenerate
boxes (left >= right or top >= bottom) are skipped with a logged warning so
evaluation can proceed over imperfect detector output.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)

DONT_CARE = "DontCare"


class LabelError(Exception):
    """Raised for malformed label or detection lines."""


@dataclass(frozen=True)
class Bbox2D:
    left: float
    top: float
    right: float
    bottom: float

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def height(self) -> float:
        return self.bottom - self.top

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class GroundTruthObject:
    class_name: str
    truncation: float
    occlusion: int
    alpha: float
    bbox: Bbox2D
    height: float
    width: float
    length: float
    x: float
    y: float
    z: float
    rotation_y: float


@dataclass(frozen=True)
class Detection:
    class_name: str
    bbox: Bbox2D
    score: float
    truncation: float = -1.0
    occlusion: int = -1
    alpha: float = -10.0
    height: float = -1.0
    width: float = -1.0
    length: float = -1.0
    x: float = -1000.0
    y: float = -1000.0
    z: float = -1000.0
    rotation_y: float = -10.0


def _floats(parts: list[str], path, lineno: int) -> list[float]:
    values = []
    for token in parts:
        try:
            values.append(float(token))
        except ValueError:
            raise LabelError(
                f"{path}:{lineno}: non-numeric field {token!r}"
            ) from None
    return values


def _check_box(box: Bbox2D, path, lineno: int) -> bool:
    if box.left >= box.right or box.top >= box.bottom:
        logger.warning("%s:%s: skipping degenerate box %s", path, lineno, box)
        return False
    return True


def parse_labels(path) -> list[GroundTruthObject]:
    """Parse a 15-field ground-truth label file."""
    path = Path(path)
    if not path.exists():
        raise LabelError(f"label file missing: {path}")
    objects = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 15:
            raise LabelError(
                f"{path}:{lineno}: expected 15 fields, got {len(parts)}"
            )
        v = _floats(parts[1:], path, lineno)
        box = Bbox2D(v[3], v[4], v[5], v[6])
        if not _check_box(box, path, lineno):
            continue
        objects.append(
            GroundTruthObject(
                class_name=parts[0],
                truncation=v[0],
                occlusion=int(v[1]),
                alpha=v[2],
                bbox=box,
                height=v[7],
                width=v[8],
                length=v[9],
                x=v[10],
                y=v[11],
                z=v[12],
                rotation_y=v[13],
            )
        )
    return objects


def parse_detections(path, reduced: bool = False) -> list[Detection]:
    """Parse a detection file.

    Default layout is the 16-field form (label fields + trailing score).
    With ``reduced=True``, lines are ``class left top right bottom score``.
    """
    path = Path(path)
    if not path.exists():
        raise LabelError(f"detection file missing: {path}")
    detections = []
    expected = 6 if reduced else 16
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != expected:
            raise LabelError(
                f"{path}:{lineno}: expected {expected} fields, got {len(parts)}"
            )
        v = _floats(parts[1:], path, lineno)
        if reduced:
            box = Bbox2D(v[0], v[1], v[2], v[3])
            score = v[4]
            extra = {}
        else:
            box = Bbox2D(v[3], v[4], v[5], v[6])
            score = v[14]
            extra = dict(
                truncation=v[0],
                occlusion=int(v[1]),
                alpha=v[2],
                height=v[7],
                width=v[8],
                length=v[9],
                x=v[10],
                y=v[11],
                z=v[12],
                rotation_y=v[13],
            )
        if not math.isfinite(score):
            raise LabelError(f"{path}:{lineno}: non-finite score {parts[-1]!r}")
        if not _check_box(box, path, lineno):
            continue
        detections.append(Detection(parts[0], box, score, **extra))
    return detections


def write_detections(detections: list[Detection], path) -> None:
    """Write detections in the 16-field layout.

    Box coordinates use 2 decimals, the score 6; the output round-trips
    through :func:`parse_detections` at that precision.  LF line endings.
    """
    path = Path(path)
    lines = []
    for d in detections:
        lines.append(
            f"{d.class_name} {d.truncation:.2f} {d.occlusion:d} {d.alpha:.2f} "
            f"{d.bbox.left:.2f} {d.bbox.top:.2f} {d.bbox.right:.2f} {d.bbox.bottom:.2f} "
            f"{d.height:.2f} {d.width:.2f} {d.length:.2f} "
            f"{d.x:.2f} {d.y:.2f} {d.z:.2f} {d.rotation_y:.2f} {d.score:.6f}"
        )
    path.write_text("\n".join(lines) + ("\n" if lines else ""), newline="\n")
