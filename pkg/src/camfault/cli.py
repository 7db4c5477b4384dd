"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 all work failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .assets import AssetError, write_asset_pack
from .campaign import (
    AllWorkFailed,
    CampaignError,
    ConfigError,
    emit_summary,
    parse_config,
    read_report_csv,
    run_campaign,
    run_inject,
    summarize,
)
from .evaluation import DIFFICULTIES, EvaluationError, evaluate_dataset
from .kitti import LabelError
from .presets import Family, PresetError, catalog_to_text, get_preset, preset_catalog
from .raster import RasterError, SeedSpec, load_image, save_image
from . import presets as preset_mod
from . import taxonomy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ALL_FAILED = 3

logger = logging.getLogger("camfault")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the CLI contract is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="camfault", description=__doc__)
    parser.add_argument("--version", action="version", version=f"camfault {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("inject", help="apply configured presets over a corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config global seed")
    p.add_argument("--jobs", type=int, help="override the config worker count")

    p = sub.add_parser("eval", help="score a detection directory against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth label directory")
    p.add_argument("--det", required=True, help="detection file directory")
    p.add_argument("--class", dest="class_name", default="Car")
    p.add_argument("--iou", type=float, default=0.7)
    p.add_argument("--difficulty", choices=sorted(DIFFICULTIES), default="moderate")
    p.add_argument("--out", help="also write the result as JSON to this path")

    p = sub.add_parser("campaign", help="inject, evaluate, and report")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config global seed")
    p.add_argument("--jobs", type=int, help="override the config worker count")

    p = sub.add_parser("apply", help="apply one preset to one image file")
    p.add_argument("--preset", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image-id", default=None, help="stream id (default: input stem)")

    p = sub.add_parser("presets", help="inspect the failure-preset catalog")
    psub = p.add_subparsers(dest="presets_command", required=True, parser_class=_Parser)
    pl = psub.add_parser("list", help="list catalog entries")
    pl.add_argument("--family", help="filter by family name")
    pe = psub.add_parser("export", help="write the catalog in its text format")
    pe.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("taxonomy", help="inspect the failure-mode registry")
    tsub = p.add_subparsers(dest="taxonomy_command", required=True, parser_class=_Parser)
    ts = tsub.add_parser("show", help="print registry records")
    ts.add_argument("--component", help="filter by camera component")
    ts.add_argument("--format", choices=("table", "tsv"), default="table")

    p = sub.add_parser("assets", help="manage the overlay asset pack")
    asub = p.add_subparsers(dest="assets_command", required=True, parser_class=_Parser)
    ae = asub.add_parser("export", help="write the built-in pack as PNGs + manifest")
    ae.add_argument("--dir", required=True)

    p = sub.add_parser("report", help="render figures and summaries from a report CSV")
    p.add_argument("--input", required=True, help="report CSV produced by a campaign")
    p.add_argument("--figures-dir", required=True)
    p.add_argument("--summary-out", help="also rewrite the family summary CSV here")

    return parser


def _load_config(args):
    config = parse_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, global_seed=args.seed)
    if args.jobs is not None:
        config = dataclasses.replace(config, jobs=max(1, args.jobs))
    return config


def _family_filter(name: str) -> Family:
    for family in Family:
        if family.value.lower() == name.lower() or family.name.lower() == name.lower():
            return family
    raise PresetError(f"unknown family {name!r} (expected one of "
                      f"{', '.join(f.value for f in Family)})")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _dispatch(args)
    except (ConfigError, PresetError, RasterError, LabelError, EvaluationError,
            AssetError, taxonomy.TaxonomyError) as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except AllWorkFailed as exc:
        logger.error("%s", exc)
        return EXIT_ALL_FAILED
    except CampaignError as exc:
        logger.error("%s", exc)
        return EXIT_DATA


def _dispatch(args) -> int:
    if args.command == "inject":
        config = _load_config(args)
        manifest = run_inject(config)
        print(
            f"wrote {len(manifest.entries)} injected images "
            f"({len(manifest.clean)} clean copies) under {config.output_dir}"
        )
        return EXIT_OK

    if args.command == "eval":
        result = evaluate_dataset(
            args.gt, args.det, args.class_name, DIFFICULTIES[args.difficulty], args.iou
        )
        print(
            f"AP@40 = {result.ap:.6f}  (class {args.class_name}, "
            f"difficulty {args.difficulty}, IoU gate {args.iou:g}, "
            f"{result.n_gt} GT, {result.n_det} detections)"
        )
        if args.out:
            payload = {
                "ap": result.ap,
                "recall_levels": list(result.recall_levels),
                "interpolated_precision": list(result.interpolated_precision),
                "n_gt": result.n_gt,
                "n_det": result.n_det,
                "class": args.class_name,
                "difficulty": args.difficulty,
                "iou_threshold": args.iou,
            }
            Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        return EXIT_OK

    if args.command == "campaign":
        config = _load_config(args)
        manifest, rows = run_campaign(config)
        print(
            f"campaign complete: {len(manifest.entries)} injected images, "
            f"{len(rows)} report rows under {config.output_dir}"
        )
        return EXIT_OK

    if args.command == "apply":
        preset = get_preset(args.preset)
        image_id = args.image_id if args.image_id is not None else Path(args.input).stem
        img = load_image(args.input)
        out = preset_mod.apply(preset, img, SeedSpec(args.seed, image_id, preset.name))
        save_image(out, args.output)
        print(f"{preset.name} -> {args.output} ({out.width}x{out.height})")
        return EXIT_OK

    if args.command == "presets":
        if args.presets_command == "list":
            entries = preset_catalog()
            if args.family:
                family = _family_filter(args.family)
                entries = [p for p in entries if p.family is family]
            sys.stdout.write(catalog_to_text(entries))
            return EXIT_OK
        if args.presets_command == "export":
            text = catalog_to_text()
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK

    if args.command == "taxonomy":
        records = taxonomy.load_registry()
        if args.component:
            try:
                component = taxonomy.Component(args.component)
            except ValueError:
                valid = ", ".join(c.value for c in taxonomy.Component)
                raise taxonomy.TaxonomyError(
                    f"unknown component {args.component!r} (expected one of {valid})"
                ) from None
            records = taxonomy.list_by_component(component)
        if args.format == "tsv":
            sys.stdout.write(taxonomy.registry_to_tsv(records))
        else:
            sys.stdout.write(taxonomy.registry_report(records))
        return EXIT_OK

    if args.command == "assets":
        ids = write_asset_pack(args.dir)
        print(f"wrote {len(ids)} assets + manifest under {args.dir}")
        return EXIT_OK

    if args.command == "report":
        rows = read_report_csv(args.input)
        from .figures import render_report_figures

        written = render_report_figures(rows, args.figures_dir)
        if args.summary_out:
            emit_summary(summarize(rows), args.summary_out)
            written.append(args.summary_out)
        print("wrote " + ", ".join(written))
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command!r}")  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
