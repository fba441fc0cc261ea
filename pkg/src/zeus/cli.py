"""Command-line orchestration.

Subcommands cover the pipeline stages individually (plan, mock-encode,
prototypes, segment, evaluate, overlay, phantom) plus `pipeline`, which
chains them over a flat JSON config whose keys are the long flag names;
explicit flags override config values.  Domain failures exit 1 with one
machine-readable JSON line on stderr; argparse usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import embio, imgio, metrics, phantom, prompts, render, simcore, tiling
from .errors import InvalidInput, ZeusError

log = logging.getLogger("zeus")

NORM_POLICY_FLAGS = {"raw": "raw_mean", "unit": "normalize_each_then_mean"}
DEFAULT_COLORS = ("#0000FF", "#FF0000", "#FFFF00", "#FF00FF")
GT_COLOR = "#00FF00"


def _init_logging() -> None:
    level = os.environ.get("ZEUS_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _parse_color(text: str) -> tuple[int, int, int]:
    value = text.lstrip("#")
    if len(value) != 6:
        raise InvalidInput(f"color must be #RRGGBB, got {text!r}")
    try:
        return tuple(int(value[i : i + 2], 16) for i in (0, 2, 4))
    except ValueError as exc:
        raise InvalidInput(f"color must be #RRGGBB, got {text!r}") from exc


def _parse_rect(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise InvalidInput(f"rect must be x0,y0,x1,y1, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise InvalidInput(f"rect must be four integers, got {text!r}") from exc


def _load_gt(path) -> metrics.GroundTruthMask:
    arr = imgio.read_gray(path)
    return metrics.GroundTruthMask(
        width=arr.shape[1], height=arr.shape[0], bits=arr != 0
    )


def _mock_model_id(dim: int, seed: int) -> str:
    return f"mock-v1:d{dim}:s{seed}"


# ---------------------------------------------------------------------------
# pipeline steps shared by the individual subcommands and `pipeline`

def step_plan(
    geom: tiling.SlideGeometry,
    patch_size: int,
    overlap: float | None,
    stride: int | None,
    tissue: tiling.TissueMask | None,
    min_tissue_frac: float,
    out_path,
) -> tiling.TileGrid:
    if stride is not None:
        grid = tiling.plan_tiles(
            geom, patch_size, overlap_frac=None, tissue=tissue,
            min_tissue_frac=min_tissue_frac, stride=stride,
        )
    else:
        grid = tiling.plan_tiles(
            geom, patch_size, overlap_frac=0.75 if overlap is None else overlap,
            tissue=tissue, min_tissue_frac=min_tissue_frac,
        )
    tiling.write_grid_manifest(geom, grid, out_path)
    log.info("planned %d tiles, stride %d", grid.num_tiles, grid.stride)
    return grid


def step_mock_embed(
    geom: tiling.SlideGeometry,
    grid: tiling.TileGrid,
    dim: int,
    seed: int,
    out_path,
) -> embio.EmbeddingSet:
    tile_ids = grid.tiles[:, 0].astype(np.uint64)
    vectors = np.stack(
        [embio.mock_encode(int(t), seed, dim) for t in tile_ids]
    ) if len(tile_ids) else np.zeros((0, dim), dtype=np.float32)
    embs = embio.EmbeddingSet(
        slide_id=geom.slide_id,
        model_id=_mock_model_id(dim, seed),
        dim=dim,
        tile_ids=tile_ids,
        vectors=vectors,
    )
    embio.write_embeddings(embs, out_path)
    return embs


def step_mock_text(
    spec: prompts.PromptSpec, dim: int, seed: int, out_path
) -> embio.TextEmbeddingSet:
    pairs = prompts.expand_all(spec)
    vectors = np.stack(
        [embio.mock_encode_text(text, seed, dim) for _, text in pairs]
    )
    encoded = embio.TextEmbeddingSet(
        spec_hash=prompts.spec_hash(spec),
        model_id=_mock_model_id(dim, seed),
        dim=dim,
        class_ids=[cid for cid, _ in pairs],
        vectors=vectors,
    )
    embio.write_text_embeddings(encoded, out_path)
    return encoded


def step_prototypes(
    spec: prompts.PromptSpec,
    encoded: embio.TextEmbeddingSet,
    policy: str,
    out_path,
) -> list[prompts.ClassPrototype]:
    protos = prompts.build_prototypes(spec, encoded, policy)
    proto_set = prompts.prototypes_to_text_set(
        protos, model_id=encoded.model_id, tag=prompts.spec_hash(spec)
    )
    embio.write_text_embeddings(proto_set, out_path)
    return protos


def step_segment(
    grid: tiling.TileGrid,
    embs: embio.EmbeddingSet,
    protos: list[prompts.ClassPrototype],
    threads: int,
    out_dir,
) -> tuple[simcore.SegmentationMask, Path]:
    want = grid.tiles[:, 0].astype(np.uint64)
    if not np.array_equal(embs.tile_ids, want):
        raise InvalidInput(
            f"embedding file covers {embs.count} tiles, manifest plans "
            f"{grid.num_tiles}; tile_id sets must match exactly"
        )
    scores = simcore.score_tiles(embs, protos)
    sim = simcore.accumulate_grid(grid, scores, threads=threads)
    mask = simcore.argmax_mask(sim)
    out_dir = Path(out_dir)
    simcore.export_similarity(sim, out_dir)
    mask_path = out_dir / "mask.png"
    simcore.export_mask(mask, mask_path)
    return mask, mask_path


def step_evaluate(
    pred: simcore.SegmentationMask,
    gt: metrics.GroundTruthMask,
    gt_scale: float,
    geom: tiling.SlideGeometry | None,
    tumor_class: int,
    slide_id: str,
    group: str,
    out_path,
) -> metrics.DatasetReport:
    cells = metrics.resample_gt(gt, pred, scale=gt_scale, geom=geom)
    report = metrics.evaluate_mask(slide_id, pred, cells, tumor_class)
    summary = metrics.aggregate([report], group)
    metrics.write_reports([report], summary, out_path)
    return summary


def step_overlay(
    thumbnail: np.ndarray,
    downsample: int,
    layers: list[render.OverlayLayer],
    thickness: int,
    out_path,
) -> None:
    out = render.overlay_contours(
        render.OverlaySpec(layers=layers, thumbnail=thumbnail, downsample=downsample),
        thickness=thickness,
    )
    imgio.write_png(out, out_path)


# ---------------------------------------------------------------------------
# subcommand handlers

def _tissue_from_args(args) -> tiling.TissueMask | None:
    thumbnail = getattr(args, "thumbnail", None)
    mask_path = getattr(args, "tissue_mask", None)
    if thumbnail and mask_path:
        raise InvalidInput("give either --thumbnail or --tissue-mask, not both")
    if not thumbnail and not mask_path:
        return None
    if args.downsample is None:
        raise InvalidInput("--downsample is required with --thumbnail/--tissue-mask")
    if mask_path:
        arr = imgio.read_gray(mask_path)
        return tiling.TissueMask(
            width=arr.shape[1], height=arr.shape[0],
            downsample=args.downsample, bits=arr != 0,
        )
    thumb = imgio.read_rgb(thumbnail)
    sat = args.sat_threshold
    return tiling.detect_tissue(
        thumb,
        args.downsample,
        median_radius=args.median_radius,
        sat_threshold="auto" if sat == "auto" else int(sat),
        min_region_px=args.min_region_px,
    )


def _cmd_plan(args) -> int:
    geom = tiling.SlideGeometry(
        slide_id=args.slide_id,
        width_px=args.width,
        height_px=args.height,
        magnification=args.magnification,
    )
    grid = step_plan(
        geom, args.patch_size, args.overlap, args.stride,
        _tissue_from_args(args), args.min_tissue_frac, args.out,
    )
    print(f"planned {grid.num_tiles} tiles (stride {grid.stride}) -> {args.out}")
    return 0


def _cmd_mock_encode(args) -> int:
    if (args.grid is None) == (args.prompt_spec is None):
        raise InvalidInput("give exactly one of --grid or --prompt-spec")
    if args.grid:
        geom, grid = tiling.read_grid_manifest(args.grid)
        embs = step_mock_embed(geom, grid, args.dim, args.seed, args.out)
        print(f"encoded {embs.count} tiles (dim {args.dim}) -> {args.out}")
    else:
        spec = prompts.load_prompt_spec(args.prompt_spec)
        encoded = step_mock_text(spec, args.dim, args.seed, args.out)
        print(f"encoded {encoded.count} prompts (dim {args.dim}) -> {args.out}")
    return 0


def _cmd_prototypes(args) -> int:
    spec = prompts.load_prompt_spec(args.prompt_spec)
    encoded = embio.read_text_embeddings(args.text_embeddings)
    policy = NORM_POLICY_FLAGS[args.norm_policy]
    protos = step_prototypes(spec, encoded, policy, args.out)
    print(f"ensembled {len(protos)} class prototypes ({policy}) -> {args.out}")
    return 0


def _cmd_segment(args) -> int:
    geom, grid = tiling.read_grid_manifest(args.grid)
    embs = embio.read_embeddings(args.embeddings)
    if embs.slide_id != geom.slide_id:
        log.warning(
            "embedding slide_id %r != manifest slide_id %r",
            embs.slide_id, geom.slide_id,
        )
    protos, _ = prompts.load_prototypes(args.prototypes)
    mask, mask_path = step_segment(grid, embs, protos, args.threads, args.out_dir)
    covered = int(np.count_nonzero(mask.labels != simcore.NO_LABEL))
    print(
        f"segmented {mask.grid_cols}x{mask.grid_rows} cells "
        f"({covered} covered) -> {mask_path}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    pred = simcore.load_mask(args.mask)
    gt = _load_gt(args.gt)
    geom = None
    if args.grid:
        geom, grid = tiling.read_grid_manifest(args.grid)
        if grid.stride != pred.stride or grid.patch_size != pred.patch_size:
            raise InvalidInput(
                "mask sidecar stride/patch_size disagree with the grid manifest"
            )
    slide_id = args.slide_id or Path(args.mask).stem
    out = args.out if args.out else sys.stdout.buffer
    summary = step_evaluate(
        pred, gt, args.gt_scale, geom, args.tumor_class, slide_id, args.group, out
    )
    print(metrics.format_table([summary]))
    return 0


def _cmd_overlay(args) -> int:
    thumb = imgio.read_rgb(args.thumbnail)
    layers = []
    mask_paths = args.mask or []
    colors = args.color or []
    for i, path in enumerate(mask_paths):
        color = colors[i] if i < len(colors) else DEFAULT_COLORS[i % len(DEFAULT_COLORS)]
        layers.append(
            render.layer_from_segmentation(
                simcore.load_mask(path), args.tumor_class,
                _parse_color(color), label=Path(path).stem,
            )
        )
    if args.gt:
        layers.append(
            render.layer_from_ground_truth(
                _load_gt(args.gt), args.gt_scale, _parse_color(args.gt_color),
                label="ground-truth",
            )
        )
    if not layers:
        log.warning("no layers given; output is a copy of the thumbnail")
    step_overlay(thumb, args.downsample, layers, args.thickness, args.out)
    print(f"overlay with {len(layers)} layer(s) -> {args.out}")
    return 0


def _cmd_phantom(args) -> int:
    geom = tiling.SlideGeometry(
        slide_id=args.slide_id, width_px=args.width, height_px=args.height
    )
    if args.rect:
        rect = _parse_rect(args.rect)
    else:
        rect = (args.width // 4, args.height // 4,
                3 * args.width // 4, 3 * args.height // 4)
    protos = phantom.make_phantom_prototypes(args.seed, args.dim)
    spec = phantom.PhantomSpec(
        geometry=geom, tumor_rect=rect, prototypes=protos,
        noise_sigma=args.noise_sigma, seed=args.seed,
    )
    if args.stride is not None:
        grid = tiling.plan_tiles(
            geom, args.patch_size, overlap_frac=None, stride=args.stride
        )
    else:
        grid = tiling.plan_tiles(
            geom, args.patch_size,
            overlap_frac=0.75 if args.overlap is None else args.overlap,
        )
    paths = phantom.write_fixture(spec, grid, args.out_dir)
    print(f"phantom fixture ({grid.num_tiles} tiles) -> {args.out_dir}")
    for name, path in paths.items():
        log.info("%s: %s", name, path)
    return 0


# ---------------------------------------------------------------------------
# pipeline

_PIPELINE_KEYS = {
    "slide-id", "width", "height", "magnification", "patch-size", "overlap",
    "stride", "thumbnail", "tissue-mask", "downsample", "sat-threshold",
    "median-radius", "min-region-px", "min-tissue-frac", "prompt-spec",
    "embeddings", "text-embeddings", "prototypes", "dim", "seed", "threads",
    "norm-policy", "tumor-class", "gt", "gt-scale", "group", "thickness",
    "out-dir",
}


def _cmd_pipeline(args) -> int:
    config = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                config = json.load(fh)
        except OSError as exc:
            raise InvalidInput(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"config is not valid JSON: {exc}") from exc
        if not isinstance(config, dict):
            raise InvalidInput("config must be a JSON object")
        unknown = set(config) - _PIPELINE_KEYS
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")

    def opt(key: str, default=None):
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            return flag
        return config.get(key, default)

    out_dir = opt("out-dir")
    if out_dir is None:
        raise InvalidInput("out-dir is required (flag or config)")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = opt("width")
    height = opt("height")
    if width is None or height is None:
        raise InvalidInput("width and height are required (flag or config)")

    geom = tiling.SlideGeometry(
        slide_id=str(opt("slide-id", "slide")),
        width_px=int(width),
        height_px=int(height),
        magnification=float(opt("magnification", 10.0)),
    )

    # tissue: optional thumbnail detection or external mask
    tissue = None
    thumbnail_path = opt("thumbnail")
    tissue_mask_path = opt("tissue-mask")
    downsample = opt("downsample")
    if thumbnail_path and tissue_mask_path:
        raise InvalidInput("config: give thumbnail or tissue-mask, not both")
    if thumbnail_path or tissue_mask_path:
        if downsample is None:
            raise InvalidInput("downsample is required with thumbnail/tissue-mask")
        downsample = int(downsample)
        if tissue_mask_path:
            arr = imgio.read_gray(tissue_mask_path)
            tissue = tiling.TissueMask(
                width=arr.shape[1], height=arr.shape[0],
                downsample=downsample, bits=arr != 0,
            )
        else:
            sat = opt("sat-threshold", "auto")
            tissue = tiling.detect_tissue(
                imgio.read_rgb(thumbnail_path),
                downsample,
                median_radius=int(opt("median-radius", 2)),
                sat_threshold="auto" if sat == "auto" else int(sat),
                min_region_px=int(opt("min-region-px", 16)),
            )

    overlap = opt("overlap")
    stride = opt("stride")
    if overlap is not None and stride is not None:
        raise InvalidInput("config: give overlap or stride, not both")
    grid = step_plan(
        geom, int(opt("patch-size", 448)),
        None if overlap is None else float(overlap),
        None if stride is None else int(stride),
        tissue, float(opt("min-tissue-frac", 0.25)), out_dir / "grid.json",
    )
    print(f"plan: {grid.num_tiles} tiles (stride {grid.stride})")

    dim = int(opt("dim", 32))
    seed = int(opt("seed", 0))

    emb_path = opt("embeddings")
    if emb_path:
        embs = embio.read_embeddings(emb_path)
    else:
        embs = step_mock_embed(geom, grid, dim, seed, out_dir / "embeddings.zemb")
        print(f"mock-encode: {embs.count} tiles (dim {dim})")

    proto_path = opt("prototypes")
    if proto_path:
        protos, _ = prompts.load_prototypes(proto_path)
        print(f"prototypes: loaded {len(protos)} classes from {proto_path}")
    else:
        spec_path = opt("prompt-spec")
        if spec_path is None:
            raise InvalidInput("prompt-spec is required unless prototypes are given")
        spec = prompts.load_prompt_spec(spec_path)
        text_path = opt("text-embeddings")
        if text_path:
            encoded = embio.read_text_embeddings(text_path)
        else:
            encoded = step_mock_text(
                spec, dim, seed, out_dir / "text_embeddings.ztxt"
            )
            print(f"mock-encode: {encoded.count} prompts (dim {dim})")
        policy = NORM_POLICY_FLAGS[str(opt("norm-policy", "raw"))]
        protos = step_prototypes(spec, encoded, policy, out_dir / "prototypes.ztxt")
        # reload from the file so segmentation sees the same float32
        # quantization as a standalone segment run reading prototypes.ztxt
        protos, _ = prompts.load_prototypes(out_dir / "prototypes.ztxt")
        print(f"prototypes: {len(protos)} classes ({policy})")

    threads = int(opt("threads", 1))
    mask, mask_path = step_segment(grid, embs, protos, threads, out_dir)
    covered = int(np.count_nonzero(mask.labels != simcore.NO_LABEL))
    print(f"segment: {mask.grid_cols}x{mask.grid_rows} cells ({covered} covered)")

    tumor_class = int(opt("tumor-class", 1))
    gt_path = opt("gt")
    gt = None
    if gt_path:
        gt = _load_gt(gt_path)
        summary = step_evaluate(
            mask, gt, float(opt("gt-scale", 1.0)), geom, tumor_class,
            geom.slide_id, str(opt("group", "all")), out_dir / "report.jsonl",
        )
        print(metrics.format_table([summary]))

    if thumbnail_path:
        thumb = imgio.read_rgb(thumbnail_path)
        layers = [
            render.layer_from_segmentation(
                mask, tumor_class, _parse_color(DEFAULT_COLORS[0]), label="prediction"
            )
        ]
        if gt is not None:
            layers.append(
                render.layer_from_ground_truth(
                    gt, float(opt("gt-scale", 1.0)), _parse_color(GT_COLOR),
                    label="ground-truth",
                )
            )
        step_overlay(
            thumb, downsample, layers, int(opt("thickness", 3)),
            out_dir / "overlay.png",
        )
        print(f"overlay -> {out_dir / 'overlay.png'}")
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_lattice_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--patch-size", type=int, default=448)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--overlap", type=float, default=None,
                   help="overlap fraction in [0,1); default 0.75")
    g.add_argument("--stride", type=int, default=None,
                   help="explicit stride in pixels (instead of --overlap)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeus",
        description="Zero-shot whole-slide segmentation from patch embeddings "
        "and prompt-derived class prototypes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan the tile lattice and write a manifest")
    p.add_argument("--slide-id", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--magnification", type=float, default=10.0)
    _add_lattice_flags(p)
    p.add_argument("--thumbnail", help="RGB thumbnail for tissue detection")
    p.add_argument("--tissue-mask", help="external tissue mask PNG (0/255)")
    p.add_argument("--downsample", type=int, default=None,
                   help="thumbnail-to-slide scale factor")
    p.add_argument("--sat-threshold", default="auto")
    p.add_argument("--median-radius", type=int, default=2)
    p.add_argument("--min-region-px", type=int, default=16)
    p.add_argument("--min-tissue-frac", type=float, default=0.25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser(
        "mock-encode",
        help="deterministic stand-in encoder: tiles or prompts to embeddings",
    )
    p.add_argument("--grid", help="grid manifest; emits patch embeddings")
    p.add_argument("--prompt-spec", help="prompt spec; emits per-prompt vectors")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mock_encode)

    p = sub.add_parser(
        "prototypes", help="ensemble per-prompt vectors into class prototypes"
    )
    p.add_argument("--prompt-spec", required=True)
    p.add_argument("--text-embeddings", required=True)
    p.add_argument("--norm-policy", choices=sorted(NORM_POLICY_FLAGS), default="raw")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_prototypes)

    p = sub.add_parser(
        "segment", help="similarity grids and argmax mask from embeddings"
    )
    p.add_argument("--grid", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--prototypes", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("evaluate", help="score a mask against ground truth")
    p.add_argument("--mask", required=True, help="predicted mask PNG (with sidecar)")
    p.add_argument("--gt", required=True, help="binary ground-truth PNG")
    p.add_argument("--gt-scale", type=float, default=1.0,
                   help="slide pixels per ground-truth pixel")
    p.add_argument("--grid", help="grid manifest for geometry validation")
    p.add_argument("--tumor-class", type=int, default=1)
    p.add_argument("--slide-id", default=None)
    p.add_argument("--group", default="all")
    p.add_argument("--out", default=None, help="report JSONL path (default stdout)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("overlay", help="draw mask contours on a thumbnail")
    p.add_argument("--thumbnail", required=True)
    p.add_argument("--downsample", type=int, required=True)
    p.add_argument("--mask", action="append", help="mask PNG; repeatable")
    p.add_argument("--color", action="append",
                   help="#RRGGBB per --mask; defaults blue then red")
    p.add_argument("--gt", help="ground-truth PNG drawn last")
    p.add_argument("--gt-scale", type=float, default=1.0)
    p.add_argument("--gt-color", default=GT_COLOR)
    p.add_argument("--tumor-class", type=int, default=1)
    p.add_argument("--thickness", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_overlay)

    p = sub.add_parser(
        "phantom", help="synthetic slide fixture with a known-answer mask"
    )
    p.add_argument("--slide-id", default="phantom")
    p.add_argument("--width", type=int, default=4480)
    p.add_argument("--height", type=int, default=4480)
    p.add_argument("--rect", default=None, help="tumor x0,y0,x1,y1 (default centered)")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    _add_lattice_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("pipeline", help="run all stages from a flat JSON config")
    p.add_argument("--config", help="flat JSON object keyed by long flag names")
    p.add_argument("--slide-id", dest="slide_id", default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--magnification", type=float, default=None)
    p.add_argument("--patch-size", type=int, default=None)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--overlap", type=float, default=None)
    g.add_argument("--stride", type=int, default=None)
    p.add_argument("--thumbnail", default=None)
    p.add_argument("--tissue-mask", default=None)
    p.add_argument("--downsample", type=int, default=None)
    p.add_argument("--sat-threshold", default=None)
    p.add_argument("--median-radius", type=int, default=None)
    p.add_argument("--min-region-px", type=int, default=None)
    p.add_argument("--min-tissue-frac", type=float, default=None)
    p.add_argument("--prompt-spec", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--text-embeddings", default=None)
    p.add_argument("--prototypes", default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--norm-policy", choices=sorted(NORM_POLICY_FLAGS), default=None)
    p.add_argument("--tumor-class", type=int, default=None)
    p.add_argument("--gt", default=None)
    p.add_argument("--gt-scale", type=float, default=None)
    p.add_argument("--group", default=None)
    p.add_argument("--thickness", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _init_logging()
    try:
        return args.func(args)
    except ZeusError as exc:
        line = json.dumps(
            {"error": type(exc).__name__, "message": str(exc)},
            separators=(",", ":"), ensure_ascii=True,
        )
        sys.stderr.write(line + "\n")
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
