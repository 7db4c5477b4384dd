"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with ``pytest tests/test_acceptance.py -v -s``).

All tolerances are pinned here; nothing is deferred to calibration.
"""

import dataclasses
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from camfault import transforms
from camfault.assets import ALPHA_MODE, OverlayAsset, composite_overlay
from camfault.campaign import (
    CLEAN_NAME,
    parse_config,
    run_campaign,
    run_inject,
    inject_only_rows,
    emit_report,
)
from camfault.evaluation import evaluate_matches, iou, match_detections
from camfault.kitti import Bbox2D, Detection, GroundTruthObject
from camfault.presets import FAMILY_COUNTS, Family, apply, preset_catalog
from camfault.raster import ImageBuffer, SeedSpec, make_rng, save_image
from camfault.taxonomy import (
    NOT_SIMULATED,
    REASON_NO_OUTPUT,
    REASON_NO_WIDE_ANGLE,
    REASON_NOT_UNIVOCAL,
    REASON_RARE,
    Component,
    load_registry,
)

from oracle import oracle_ap40
from test_campaign import mask_wall_time, tree_digest


@contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"[ACCEPT] {name}: FAIL")
        raise
    print(f"[ACCEPT] {name}: PASS")


def _gt(box, class_name="Car"):
    return GroundTruthObject(class_name, 0.0, 0, 0.0, Bbox2D(*box),
                             1.5, 1.6, 3.5, 0.0, 0.0, 10.0, 0.0)


def _det(box, score):
    return Detection("Car", Bbox2D(*box), score)


def test_catalog_130_with_family_breakdown():
    with criterion("preset catalog: 130 entries, family breakdown"):
        catalog = preset_catalog()
        assert len(catalog) == 130
        counts = {}
        for p in catalog:
            counts[p.family] = counts.get(p.family, 0) + 1
        expected = {
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
        assert counts == expected == FAMILY_COUNTS
        assert len({p.name for p in catalog}) == 130


def test_ap_oracle_equivalence_200_micro_instances():
    with criterion("AP pipeline equals brute-force oracle on 200 micro-instances (<=1e-12, <5s)"):
        rng = np.random.default_rng(424242)
        started = time.perf_counter()
        checked = 0
        while checked < 200:
            n_gt_total = int(rng.integers(1, 6))       # <= 5 GT
            n_det_total = int(rng.integers(0, 9))      # <= 8 detections
            n_images = int(rng.integers(1, 3))
            gt_split = rng.multinomial(n_gt_total, np.ones(n_images) / n_images)
            det_split = rng.multinomial(n_det_total, np.ones(n_images) / n_images)
            instances = []
            for i in range(n_images):
                eligible = [_rand_box(rng) for _ in range(int(gt_split[i]))]
                dets = []
                for _ in range(int(det_split[i])):
                    if eligible and rng.uniform() < 0.6:
                        b = eligible[int(rng.integers(0, len(eligible)))]
                        dx, dy = rng.uniform(-6, 6, 2)
                        box = (b[0] + dx, b[1] + dy, b[2] + dx, b[3] + dy)
                    else:
                        box = _rand_box(rng)
                    dets.append((float(rng.uniform()), box))
                instances.append((eligible, [], dets))
            matches = [
                match_detections([_det(b, s) for s, b in dets],
                                 [_gt(b) for b in eligible], [])
                for eligible, _, dets in instances
            ]
            pipeline = evaluate_matches(matches).ap
            expected = oracle_ap40(instances)
            assert abs(pipeline - expected) <= 1e-12
            checked += 1
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"oracle sweep took {elapsed:.2f}s"


def _rand_box(rng):
    x = float(rng.uniform(0, 60))
    y = float(rng.uniform(0, 60))
    s = float(rng.uniform(26, 40))
    return (x, y, x + s, y + s)


def test_iou_gate_inclusive_at_exactly_070():
    with criterion("IoU gate: 0.70 is TP, 0.699 is FP"):
        gt_box = [_gt((0, 0, 10, 10))]
        at_gate = [_det((0, 0, 10, 7), 0.9)]
        assert iou(at_gate[0].bbox, gt_box[0].bbox) == 0.7
        r = match_detections(at_gate, gt_box, [], 0.7)
        assert (r.tp, r.fp, r.fn) == (1, 0, 0)
        below = [_det((0, 0, 10, 6.99), 0.9)]
        r = match_detections(below, gt_box, [], 0.7)
        assert (r.tp, r.fp, r.fn) == (0, 1, 1)


def test_worked_ap_example():
    with criterion("worked AP example: 2 GT / 3 det -> 0.833333... (+-1e-9)"):
        gts = [_gt((0, 0, 30, 30)), _gt((100, 100, 130, 130))]
        dets = [
            _det((0, 0, 30, 30), 0.9),
            _det((300, 300, 330, 330), 0.8),
            _det((100, 100, 130, 130), 0.7),
        ]
        result = evaluate_matches([match_detections(dets, gts, [])])
        assert abs(result.ap - (20 * 1.0 + 20 * (2 / 3)) / 40) <= 1e-9


def test_grayscale_constant_pure_red():
    with criterion("achromatic constant: pure red -> (76, 76, 76)"):
        img = ImageBuffer(np.array([[[255, 0, 0]]], dtype=np.uint8))
        out = transforms.no_bayer(img)
        assert out.data.tolist() == [[[76, 76, 76]]]


def test_mosaic_law_on_50_random_images():
    with criterion("mosaic law: (2w, 2h), <=1 channel per photosite, BGGR tiling (50 images)"):
        rng = np.random.default_rng(5150)
        for _ in range(50):
            w = int(rng.integers(1, 48))
            h = int(rng.integers(1, 48))
            img = ImageBuffer(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))
            out = transforms.demosaic_raw(img)
            assert (out.width, out.height) == (2 * w, 2 * h)
            data = out.data
            assert (data > 0).sum(axis=2).max() <= 1
            assert data[0::2, 0::2, 0].max(initial=0) == 0  # top-left: blue only
            assert data[0::2, 0::2, 1].max(initial=0) == 0
            assert data[0::2, 1::2, 0].max(initial=0) == 0  # top-right: green only
            assert data[0::2, 1::2, 2].max(initial=0) == 0
            assert data[1::2, 0::2, 0].max(initial=0) == 0  # bottom-left: green only
            assert data[1::2, 0::2, 2].max(initial=0) == 0
            assert data[1::2, 1::2, 1].max(initial=0) == 0  # bottom-right: red only
            assert data[1::2, 1::2, 2].max(initial=0) == 0
            assert np.array_equal(data[0::2, 0::2, 2], img.data[:, :, 2])
            assert np.array_equal(data[1::2, 1::2, 0], img.data[:, :, 0])


def test_identity_degenerations_byte_identical():
    with criterion("identity degenerations return the input byte-identically"):
        rng = np.random.default_rng(31337)
        img = ImageBuffer(rng.integers(0, 256, (40, 56, 3), dtype=np.uint8))
        cases = {
            "blur k=1": transforms.blur(img, 1),
            "brightness 1": transforms.brightness(img, 1.0),
            "sharpness 1": transforms.sharpness(img, 1.0),
            "aberration delta=0": transforms.chromatic_aberration(img, 1, False, delta=0.0),
        }
        transparent = OverlayAsset(
            "clear", "dirty",
            np.zeros((img.height, img.width, 4), dtype=np.uint8), ALPHA_MODE, 1.0,
        )
        cases["transparent overlay"] = composite_overlay(img, transparent)
        for label, out in cases.items():
            assert out.data.tobytes() == img.data.tobytes(), label


def test_campaign_determinism_under_parallelism(tmp_path):
    with criterion("campaign: 5 images x 130 presets, 1 vs 8 workers byte-identical, <120s"):
        started = time.perf_counter()
        rng = np.random.default_rng(808)
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for i in range(5):
            img = ImageBuffer(rng.integers(0, 256, (160, 384, 3), dtype=np.uint8))
            save_image(img, corpus / f"{i:06d}.png")
        base = (
            f"input_dir: {corpus}\n"
            "preset: *\n"
            "seed: 2024\n"
        )
        results = {}
        for jobs in (1, 8):
            out_dir = tmp_path / f"run_j{jobs}"
            cfg_path = tmp_path / f"j{jobs}.cfg"
            cfg_path.write_text(base + f"output_dir: {out_dir}\njobs: {jobs}\n")
            config = parse_config(cfg_path)
            manifest = run_inject(config)
            assert len(manifest.entries) == 5 * 130
            assert len(manifest.clean) == 5
            rows = inject_only_rows(config, manifest)
            report = tmp_path / f"report_j{jobs}.csv"
            emit_report(rows, "csv", report, config)
            results[jobs] = (
                tree_digest(out_dir),
                mask_wall_time(report.read_text()),
            )
        assert results[1][0] == results[8][0], "output trees differ across worker counts"
        assert results[1][1] == results[8][1], "reports differ across worker counts"
        elapsed = time.perf_counter() - started
        assert elapsed < 120.0, f"campaign pair took {elapsed:.1f}s"


def test_dead_pixel_cardinalities():
    with criterion("dead-pixel cardinalities: 1/50/200/500/h/2w+h-2"):
        w, h = 384, 160
        img = ImageBuffer(np.full((h, w, 3), 200, dtype=np.uint8))
        expect = {
            "n1": 1,
            "n50": 50,
            "n200": 200,
            "n500": 500,
            "vcl": h,
            "3l": 2 * w + h - 2,
        }
        for mode, count in expect.items():
            out = transforms.dead_pixels(img, mode, make_rng(SeedSpec(0, "c", mode)))
            black = np.all(out.data == 0, axis=2)
            assert int(black.sum()) == count, mode


EXPECTED_COMPONENTS = {
    "Banding": {Component.IMAGE_SENSOR},
    "Blurred": {Component.LENS},
    "Brackish/Salt-Water": {Component.LENS, Component.CAMERA_BODY},
    "Bright Lines": {Component.IMAGE_SENSOR},
    "Brightness": {Component.LENS},
    "Broken Lens": {Component.LENS},
    "Broken VR": {Component.LENS},
    "Condensation": {Component.LENS, Component.CAMERA_BODY},
    "Dead Pixel": {Component.IMAGE_SENSOR},
    "Dirty": {Component.LENS},
    "Electrical Overload": {Component.CAMERA_BODY},
    "Flare": {Component.LENS},
    "Heat": {Component.LENS, Component.CAMERA_BODY},
    "Ice": {Component.LENS, Component.CAMERA_BODY},
    "No Action": {Component.ISP},
    "No Bayer Filter": {Component.BAYER_FILTER},
    "No Chromatic Aberration Correction": {Component.ISP},
    "No Demosaicing": {Component.ISP},
    "No Lens Distortion Correction": {Component.ISP},
    "No Noise Reduction": {Component.ISP},
    "No Sharpness": {Component.ISP},
    "Rain": {Component.LENS},
    "Sand": {Component.LENS, Component.CAMERA_BODY},
    "Spots": {Component.IMAGE_SENSOR},
    "Water": {Component.LENS, Component.CAMERA_BODY},
    "Wind": {Component.LENS, Component.CAMERA_BODY},
}


def test_taxonomy_completeness():
    with criterion("taxonomy: 26 records, per-record components, exclusion reasons"):
        records = {r.name: r for r in load_registry()}
        assert len(records) == 26
        assert set(records) == set(EXPECTED_COMPONENTS)
        for name, components in EXPECTED_COMPONENTS.items():
            assert records[name].components == components, name
        excluded = {
            r.name: r.reason for r in records.values() if r.status == NOT_SIMULATED
        }
        assert excluded == {
            "Electrical Overload": REASON_NO_OUTPUT,
            "No Action": REASON_NO_OUTPUT,
            "Water": REASON_NO_OUTPUT,
            "Brackish/Salt-Water": REASON_NOT_UNIVOCAL,
            "Heat": REASON_NOT_UNIVOCAL,
            "Sand": REASON_NOT_UNIVOCAL,
            "Bright Lines": REASON_RARE,
            "Wind": REASON_RARE,
            "No Lens Distortion Correction": REASON_NO_WIDE_ANGLE,
        }


JITTER_DETECTOR = '''
import argparse, pathlib
import numpy as np
from PIL import Image

parser = argparse.ArgumentParser()
parser.add_argument("--image", required=True)
parser.add_argument("--out", required=True)
parser.add_argument("--gt-dir", required=True)
parser.add_argument("--clean-dir", required=True)
args = parser.parse_args()

stem = pathlib.Path(args.image).stem
injected = np.asarray(Image.open(args.image).convert("RGB"), dtype=np.float64)
clean = np.asarray(
    Image.open(pathlib.Path(args.clean_dir) / (stem + ".png")).convert("RGB"),
    dtype=np.float64,
)
rms = float(np.sqrt(np.mean((injected - clean) ** 2)))
dx = 0.22 * rms

lines = []
for line in pathlib.Path(args.gt_dir, stem + ".txt").read_text().splitlines():
    parts = line.split()
    if len(parts) != 15:
        continue
    left, top, right, bottom = (float(v) for v in parts[4:8])
    parts[4] = f"{left + dx:.2f}"
    parts[6] = f"{right + dx:.2f}"
    lines.append(" ".join(parts) + " 1.000000")
pathlib.Path(args.out).write_text("\\n".join(lines) + "\\n")
'''


def test_monotonic_degradation_smoke(tmp_path):
    with criterion("monotonic degradation: AP over BLUR 1/5/10/20/25 non-increasing"):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        gt_dir = tmp_path / "gt"
        gt_dir.mkdir()
        w, h = 384, 160
        xs = np.arange(w, dtype=np.float64)
        sizes = (26, 32, 40, 50, 60)
        for i in range(5):
            wave = 128.0 + 100.0 * np.sin(2 * np.pi * (xs + 7 * i) / 32.0)
            data = np.repeat(wave[None, :], h, axis=0)
            img = ImageBuffer.from_array(np.repeat(data[..., None], 3, axis=2))
            save_image(img, corpus / f"{i:06d}.png")
            lines = []
            for j, s in enumerate(sizes):
                left, top = 8 + j * 74, 40
                lines.append(
                    f"Car 0.00 0 0.00 {left:.2f} {top:.2f} {left + s:.2f} {top + s:.2f} "
                    "1.50 1.60 3.50 0.00 0.00 10.00 0.00"
                )
            (gt_dir / f"{i:06d}.txt").write_text("\n".join(lines) + "\n")

        script = tmp_path / "jitterdet.py"
        script.write_text(JITTER_DETECTOR)
        out_dir = tmp_path / "out"
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            f"input_dir: {corpus}\n"
            f"output_dir: {out_dir}\n"
            f"gt_dir: {gt_dir}\n"
            f"detector_cmd: {sys.executable} {script} --image {{image}} "
            f"--out {{detections}} --gt-dir {gt_dir} --clean-dir {out_dir / CLEAN_NAME}\n"
            + "".join(f"preset: BLUR_{k}\n" for k in (1, 5, 10, 20, 25))
        )
        _, rows = run_campaign(parse_config(cfg))
        ap_by_preset = {r.preset: r.ap for r in rows}
        assert ap_by_preset[CLEAN_NAME] == 1.0
        sequence = [ap_by_preset[f"BLUR_{k}"] for k in (1, 5, 10, 20, 25)]
        assert all(a is not None for a in sequence)
        assert all(
            sequence[i] >= sequence[i + 1] for i in range(len(sequence) - 1)
        ), sequence
        # the jitter must actually bite by the deep end of the range
        assert sequence[0] == 1.0
        assert sequence[-1] < sequence[0]
