"""Batch orchestration: inject preset sets over a corpus, evaluate, report.

A campaign walks an image directory, writes one injected copy per (image,
preset) pair under ``output_dir/<preset>/<image-id>.png`` plus clean copies
under ``output_dir/CLEAN/``, optionally drives an external detector command
over every injected tree, scores the detections against KITTI ground truth,
and emits per-preset report rows with family summaries.

Everything is deterministic for a fixed corpus and global seed: stochastic
presets derive their streams from (seed, image id, preset name), so worker
count and scheduling cannot change a single output byte.
"""

from __future__ import annotations

import concurrent.futures
import json
import logging
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .assets import AssetPack
from .evaluation import DIFFICULTIES, EvaluationError, evaluate_dataset
from .kitti import LabelError
from .presets import PresetError, expand_selection, get_preset
from .raster import RNG_NAME, RasterError, SeedSpec, load_image, save_image
from . import presets as preset_mod

logger = logging.getLogger(__name__)

CLEAN_NAME = "CLEAN"
IMAGE_SUFFIXES = (".png", ".bmp", ".tif", ".tiff")
_DETECTIONS_SUBDIR = "_detections"

STATUS_OK = "ok"
STATUS_FAILED = "detector_failed"
STATUS_SKIPPED = "not_evaluated"

CSV_COLUMNS = (
    "preset",
    "family",
    "n_images",
    "status",
    "ap",
    "ap_clean_delta",
    "within_5pp_of_clean",
    "wall_time_s",
    "tool_version",
    "rng",
    "global_seed",
)


class ConfigError(Exception):
    """Raised for malformed or unresolvable campaign configuration."""


class CampaignError(Exception):
    """Raised for unrecoverable campaign failures."""


class AllWorkFailed(CampaignError):
    """Every injection task failed; nothing was produced."""


@dataclass(frozen=True)
class CampaignConfig:
    input_dir: str
    output_dir: str
    presets: tuple[str, ...]
    gt_dir: str | None = None
    det_dir: str | None = None
    detector_cmd: str | None = None
    global_seed: int = 0
    iou_threshold: float = 0.7
    difficulty: str = "moderate"
    class_name: str = "Car"
    report_formats: tuple[str, ...] = ("csv",)
    jobs: int = 1
    figures: bool = True
    asset_dir: str | None = None


@dataclass(frozen=True)
class InjectionRecord:
    preset: str
    image_id: str
    path: str


@dataclass
class Manifest:
    entries: list[InjectionRecord] = field(default_factory=list)
    clean: list[InjectionRecord] = field(default_factory=list)
    inject_seconds: dict[str, float] = field(default_factory=dict)

    def presets(self) -> list[str]:
        seen = dict.fromkeys(e.preset for e in self.entries)
        return list(seen)

    def image_ids(self) -> list[str]:
        return sorted({e.image_id for e in self.entries})


@dataclass
class ReportRow:
    preset: str
    family: str
    n_images: int
    status: str = STATUS_SKIPPED
    ap: float | None = None
    ap_clean_delta: float | None = None
    within_5pp_of_clean: bool | None = None
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class FamilySummary:
    family: str
    n_presets: int
    ap_min: float | None
    ap_max: float | None
    ap_avg: float | None


# --------------------------------------------------------------------------
# Config file grammar: one `key: value` pair per line, '#' comments,
# repeatable keys `preset` and `report`.  Unknown keys are errors.


_SCALAR_KEYS = {
    "input_dir",
    "output_dir",
    "gt_dir",
    "det_dir",
    "detector_cmd",
    "seed",
    "iou",
    "difficulty",
    "class",
    "jobs",
    "figures",
    "asset_dir",
}
_LIST_KEYS = {"preset", "report"}


def parse_config_text(text: str, source: str = "<config>") -> CampaignConfig:
    scalars: dict[str, str] = {}
    lists: dict[str, list[str]] = {"preset": [], "report": []}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if not sep or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key: value'")
        if key in _LIST_KEYS:
            lists[key].append(value)
        elif key in _SCALAR_KEYS:
            if key in scalars:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            scalars[key] = value
        else:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")

    for required in ("input_dir", "output_dir"):
        if required not in scalars:
            raise ConfigError(f"{source}: missing required key {required!r}")
    if not lists["preset"]:
        raise ConfigError(f"{source}: at least one 'preset:' line is required")
    try:
        selection = expand_selection(lists["preset"])
    except PresetError as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    detector_cmd = scalars.get("detector_cmd")
    if detector_cmd is not None:
        for placeholder in ("{image}", "{detections}"):
            if placeholder not in detector_cmd:
                raise ConfigError(
                    f"{source}: detector_cmd must contain the {placeholder} placeholder"
                )

    difficulty = scalars.get("difficulty", "moderate").lower()
    if difficulty not in DIFFICULTIES:
        raise ConfigError(
            f"{source}: unknown difficulty {difficulty!r} (expected one of {sorted(DIFFICULTIES)})"
        )
    report_formats = tuple(lists["report"]) or ("csv",)
    for fmt in report_formats:
        if fmt not in ("csv", "json"):
            raise ConfigError(f"{source}: unknown report format {fmt!r}")

    def _int(key: str, default: int) -> int:
        try:
            return int(scalars.get(key, default))
        except ValueError:
            raise ConfigError(f"{source}: {key!r} must be an integer") from None

    def _float(key: str, default: float) -> float:
        try:
            return float(scalars.get(key, default))
        except ValueError:
            raise ConfigError(f"{source}: {key!r} must be a number") from None

    figures_text = scalars.get("figures", "true").lower()
    if figures_text not in ("true", "false"):
        raise ConfigError(f"{source}: 'figures' must be true or false")

    return CampaignConfig(
        input_dir=scalars["input_dir"],
        output_dir=scalars["output_dir"],
        presets=tuple(selection),
        gt_dir=scalars.get("gt_dir"),
        det_dir=scalars.get("det_dir"),
        detector_cmd=detector_cmd,
        global_seed=_int("seed", 0),
        iou_threshold=_float("iou", 0.7),
        difficulty=difficulty,
        class_name=scalars.get("class", "Car"),
        report_formats=report_formats,
        jobs=max(1, _int("jobs", 1)),
        figures=figures_text == "true",
        asset_dir=scalars.get("asset_dir"),
    )


def parse_config(path) -> CampaignConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file missing: {path}")
    return parse_config_text(path.read_text(), source=str(path))


def config_to_text(config: CampaignConfig) -> str:
    """Serialize a config back into the line grammar (round-trippable)."""
    lines = [
        f"input_dir: {config.input_dir}",
        f"output_dir: {config.output_dir}",
    ]
    if config.gt_dir:
        lines.append(f"gt_dir: {config.gt_dir}")
    if config.det_dir:
        lines.append(f"det_dir: {config.det_dir}")
    if config.detector_cmd:
        lines.append(f"detector_cmd: {config.detector_cmd}")
    if config.asset_dir:
        lines.append(f"asset_dir: {config.asset_dir}")
    lines.extend(f"preset: {name}" for name in config.presets)
    lines.append(f"seed: {config.global_seed}")
    lines.append(f"iou: {config.iou_threshold:g}")
    lines.append(f"difficulty: {config.difficulty}")
    lines.append(f"class: {config.class_name}")
    lines.extend(f"report: {fmt}" for fmt in config.report_formats)
    lines.append(f"jobs: {config.jobs}")
    lines.append(f"figures: {'true' if config.figures else 'false'}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Injection


def _scan_corpus(input_dir: Path) -> list[Path]:
    files = sorted(
        p for p in input_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not files:
        raise CampaignError(f"no images found in {input_dir}")
    return files


def _inject_one(args) -> tuple[str, str, str, float, str | None]:
    """Worker task: apply one preset to one image file.  Returns
    (preset, image_id, relpath, seconds, error)."""
    image_path, image_id, preset_name, out_path, global_seed, asset_dir = args
    started = time.perf_counter()
    try:
        pack = AssetPack(asset_dir) if asset_dir else None
        img = load_image(image_path)
        out = preset_mod.apply(
            preset_name, img, SeedSpec(global_seed, image_id, preset_name), pack
        )
        save_image(out, out_path)
    except (RasterError, PresetError, OSError) as exc:
        return preset_name, image_id, out_path, time.perf_counter() - started, str(exc)
    return preset_name, image_id, out_path, time.perf_counter() - started, None


def run_inject(config: CampaignConfig) -> Manifest:
    """Apply every configured preset to every corpus image.

    Output tree: ``output_dir/<preset>/<image-id>.png`` plus clean re-encoded
    copies under ``output_dir/CLEAN/``.  Unreadable images are logged and
    skipped; if every task fails the campaign aborts.
    """
    input_dir = Path(config.input_dir)
    output_dir = Path(config.output_dir)
    if not input_dir.is_dir():
        raise CampaignError(f"input directory missing: {input_dir}")
    images = _scan_corpus(input_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    manifest = Manifest()
    clean_dir = output_dir / CLEAN_NAME
    clean_dir.mkdir(exist_ok=True)
    for path in images:
        image_id = path.stem
        target = clean_dir / f"{image_id}.png"
        try:
            save_image(load_image(path), target)
        except RasterError as exc:
            logger.warning("clean copy failed for %s: %s", path, exc)
            continue
        manifest.clean.append(InjectionRecord(CLEAN_NAME, image_id, str(target)))

    tasks = []
    for preset_name in config.presets:
        preset_dir = output_dir / preset_name
        preset_dir.mkdir(exist_ok=True)
        for path in images:
            image_id = path.stem
            tasks.append(
                (
                    str(path),
                    image_id,
                    preset_name,
                    str(preset_dir / f"{image_id}.png"),
                    config.global_seed,
                    config.asset_dir,
                )
            )

    results = []
    if config.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_inject_one, tasks, chunksize=8))
    else:
        results = [_inject_one(t) for t in tasks]

    failures = 0
    for preset_name, image_id, out_path, seconds, error in results:
        manifest.inject_seconds[preset_name] = (
            manifest.inject_seconds.get(preset_name, 0.0) + seconds
        )
        if error is not None:
            logger.warning("inject %s on %s failed: %s", preset_name, image_id, error)
            failures += 1
            continue
        manifest.entries.append(InjectionRecord(preset_name, image_id, out_path))
    if tasks and failures == len(tasks):
        raise AllWorkFailed("every injection task failed")

    manifest.entries.sort(key=lambda e: (config.presets.index(e.preset), e.image_id))
    _write_manifest(manifest, output_dir / "manifest.tsv")
    return manifest


def _write_manifest(manifest: Manifest, path: Path) -> None:
    lines = [f"{e.preset}\t{e.image_id}\t{e.path}" for e in manifest.clean]
    lines += [f"{e.preset}\t{e.image_id}\t{e.path}" for e in manifest.entries]
    path.write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# Evaluation


def _run_detector(cmd_template: str, image_path: str, det_path: str) -> bool:
    tokens = [
        t.replace("{image}", image_path).replace("{detections}", det_path)
        for t in shlex.split(cmd_template)
    ]
    proc = subprocess.run(tokens, capture_output=True, text=True)
    if proc.returncode != 0:
        logger.warning(
            "detector exited %d on %s: %s", proc.returncode, image_path, proc.stderr.strip()
        )
        return False
    return True


def _detections_for(
    config: CampaignConfig, preset_name: str, records: list[InjectionRecord], output_dir: Path
) -> tuple[Path | None, str]:
    """Resolve (or produce) the detections directory for one preset tree."""
    if config.detector_cmd:
        det_dir = output_dir / _DETECTIONS_SUBDIR / preset_name
        det_dir.mkdir(parents=True, exist_ok=True)
        for record in records:
            det_path = det_dir / f"{record.image_id}.txt"
            if not _run_detector(config.detector_cmd, record.path, str(det_path)):
                return None, STATUS_FAILED
        return det_dir, STATUS_OK
    if config.det_dir:
        det_dir = Path(config.det_dir) / preset_name
        return det_dir, STATUS_OK
    raise CampaignError("evaluation needs detector_cmd or det_dir")


def run_evaluate(config: CampaignConfig, manifest: Manifest) -> list[ReportRow]:
    """Score every preset tree (and the clean tree) against ground truth."""
    if not config.gt_dir:
        raise CampaignError("evaluation needs gt_dir")
    output_dir = Path(config.output_dir)
    difficulty = DIFFICULTIES[config.difficulty]

    groups: list[tuple[str, list[InjectionRecord]]] = [(CLEAN_NAME, manifest.clean)]
    by_preset: dict[str, list[InjectionRecord]] = {}
    for e in manifest.entries:
        by_preset.setdefault(e.preset, []).append(e)
    groups.extend((name, by_preset[name]) for name in manifest.presets())

    rows: list[ReportRow] = []
    clean_ap: float | None = None
    for preset_name, records in groups:
        family = (
            "Clean" if preset_name == CLEAN_NAME else get_preset(preset_name).family.value
        )
        row = ReportRow(
            preset=preset_name,
            family=family,
            n_images=len(records),
            wall_time_s=manifest.inject_seconds.get(preset_name, 0.0),
        )
        started = time.perf_counter()
        det_dir, status = _detections_for(config, preset_name, records, output_dir)
        row.status = status
        if det_dir is not None:
            try:
                result = evaluate_dataset(
                    config.gt_dir,
                    det_dir,
                    config.class_name,
                    difficulty,
                    config.iou_threshold,
                )
                row.ap = result.ap
                row.status = STATUS_OK
            except (EvaluationError, LabelError) as exc:
                logger.warning("evaluation failed for %s: %s", preset_name, exc)
                row.status = STATUS_FAILED
        row.wall_time_s += time.perf_counter() - started
        if preset_name == CLEAN_NAME and row.ap is not None:
            clean_ap = row.ap
        rows.append(row)

    for row in rows:
        if row.ap is not None and clean_ap is not None:
            row.ap_clean_delta = clean_ap - row.ap
            row.within_5pp_of_clean = abs(row.ap_clean_delta) < 0.05
    return rows


def inject_only_rows(config: CampaignConfig, manifest: Manifest) -> list[ReportRow]:
    """Report rows for a campaign without evaluation (no AP columns)."""
    counts: dict[str, int] = {}
    for e in manifest.entries:
        counts[e.preset] = counts.get(e.preset, 0) + 1
    rows = [
        ReportRow(
            preset=CLEAN_NAME,
            family="Clean",
            n_images=len(manifest.clean),
            wall_time_s=manifest.inject_seconds.get(CLEAN_NAME, 0.0),
        )
    ]
    for name in manifest.presets():
        rows.append(
            ReportRow(
                preset=name,
                family=get_preset(name).family.value,
                n_images=counts.get(name, 0),
                wall_time_s=manifest.inject_seconds.get(name, 0.0),
            )
        )
    return rows


# --------------------------------------------------------------------------
# Reporting


def summarize(rows: list[ReportRow]) -> list[FamilySummary]:
    """Per-family min/max/average AP over rows that carry an AP."""
    if not rows:
        raise CampaignError("no report rows to summarize")
    order: dict[str, list[ReportRow]] = {}
    for row in rows:
        order.setdefault(row.family, []).append(row)
    summaries = []
    for family, members in order.items():
        aps = [r.ap for r in members if r.ap is not None]
        summaries.append(
            FamilySummary(
                family=family,
                n_presets=len(members),
                ap_min=min(aps) if aps else None,
                ap_max=max(aps) if aps else None,
                ap_avg=sum(aps) / len(aps) if aps else None,
            )
        )
    return summaries


def _report_meta(config: CampaignConfig) -> dict:
    return {
        "tool_version": __version__,
        "rng": RNG_NAME,
        "global_seed": config.global_seed,
    }


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def emit_report(rows: list[ReportRow], fmt: str, path, config: CampaignConfig) -> None:
    """Write the per-preset report; one header plus one line per row (CSV)
    or a meta+rows object (JSON)."""
    path = Path(path)
    meta = _report_meta(config)
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in rows:
            lines.append(
                ",".join(
                    _fmt_cell(v)
                    for v in (
                        row.preset,
                        row.family,
                        row.n_images,
                        row.status,
                        row.ap,
                        row.ap_clean_delta,
                        row.within_5pp_of_clean,
                        round(row.wall_time_s, 6),
                        meta["tool_version"],
                        meta["rng"],
                        meta["global_seed"],
                    )
                )
            )
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        payload = {
            "meta": meta,
            "rows": [
                {
                    "preset": row.preset,
                    "family": row.family,
                    "n_images": row.n_images,
                    "status": row.status,
                    "ap": row.ap,
                    "ap_clean_delta": row.ap_clean_delta,
                    "within_5pp_of_clean": row.within_5pp_of_clean,
                    "wall_time_s": round(row.wall_time_s, 6),
                }
                for row in rows
            ],
        }
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        raise CampaignError(f"unknown report format {fmt!r}")


def read_report_csv(path) -> list[ReportRow]:
    """Parse a report CSV written by :func:`emit_report` back into rows."""
    path = Path(path)
    if not path.exists():
        raise CampaignError(f"report file missing: {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0].split(",")[: len(CSV_COLUMNS)] != list(CSV_COLUMNS):
        raise CampaignError(f"{path}: not a camfault report (unexpected header)")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(CSV_COLUMNS):
            raise CampaignError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} columns")
        record = dict(zip(CSV_COLUMNS, cells))
        rows.append(
            ReportRow(
                preset=record["preset"],
                family=record["family"],
                n_images=int(record["n_images"]),
                status=record["status"],
                ap=float(record["ap"]) if record["ap"] else None,
                ap_clean_delta=(
                    float(record["ap_clean_delta"]) if record["ap_clean_delta"] else None
                ),
                within_5pp_of_clean=(
                    record["within_5pp_of_clean"] == "true"
                    if record["within_5pp_of_clean"]
                    else None
                ),
                wall_time_s=float(record["wall_time_s"]) if record["wall_time_s"] else 0.0,
            )
        )
    return rows


def emit_summary(summaries: list[FamilySummary], path) -> None:
    lines = ["family,n_presets,ap_min,ap_max,ap_avg"]
    for s in summaries:
        lines.append(
            ",".join(
                (
                    s.family,
                    str(s.n_presets),
                    _fmt_cell(s.ap_min),
                    _fmt_cell(s.ap_max),
                    _fmt_cell(s.ap_avg),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def run_campaign(config: CampaignConfig) -> tuple[Manifest, list[ReportRow]]:
    """Full pipeline: inject, evaluate when ground truth is configured,
    write reports (and figures when asked)."""
    manifest = run_inject(config)
    if config.gt_dir and (config.detector_cmd or config.det_dir):
        rows = run_evaluate(config, manifest)
    else:
        rows = inject_only_rows(config, manifest)
    output_dir = Path(config.output_dir)
    for fmt in config.report_formats:
        emit_report(rows, fmt, output_dir / f"report.{fmt}", config)
    emit_summary(summarize(rows), output_dir / "report_summary.csv")
    if config.figures:
        from .figures import render_report_figures

        render_report_figures(rows, output_dir / "figures")
    return manifest, rows
