"""zeus-adapter command line: encode tiles or prompts with a checkpoint."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import checkpoints, formats
from .encode import AdapterJob, encode_patches, encode_prompts
from .errors import AdapterError


def _init_logging() -> None:
    level = os.environ.get("ZEUS_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _cmd_encode_patches(args) -> int:
    job = AdapterJob(
        model_ref=args.model,
        grid_manifest_path=args.grid,
        slide_source=args.slide or args.tiles,
        patches_out=args.out,
        batch_size=args.batch_size,
    )
    path = encode_patches(job)
    manifest = formats.read_grid_manifest(args.grid)
    print(f"encoded {len(manifest.tiles)} tiles -> {path}")
    return 0


def _cmd_encode_prompts(args) -> int:
    job = AdapterJob(
        model_ref=args.model,
        prompt_spec_path=args.prompt_spec,
        prompts_out=args.out,
        batch_size=args.batch_size,
    )
    path = encode_prompts(job)
    spec = formats.load_prompt_spec(args.prompt_spec)
    print(f"encoded {len(formats.expand_all(spec))} prompts -> {path}")
    return 0


def _cmd_toy_checkpoint(args) -> int:
    checkpoints.make_test_checkpoint(
        args.out, embed_dim=args.dim, image_size=args.image_size,
        context_length=args.context_length, seed=args.seed,
    )
    print(f"toy checkpoint (dim {args.dim}) -> {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeus-adapter",
        description="Encode slide tiles and text prompts with a TorchScript "
        "checkpoint into the segmentation engine's binary embedding files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode-patches", help="embed every manifest tile")
    p.add_argument("--model", required=True, help="TorchScript checkpoint path")
    p.add_argument("--grid", required=True, help="grid manifest JSON")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--slide", help="slide image file to crop tiles from")
    g.add_argument("--tiles", help="directory of {tile_id}.png files")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--out", required=True, help="output .zemb path")
    p.set_defaults(func=_cmd_encode_patches)

    p = sub.add_parser("encode-prompts", help="embed every expanded prompt")
    p.add_argument("--model", required=True, help="TorchScript checkpoint path")
    p.add_argument("--prompt-spec", required=True, help="prompt spec JSON")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--out", required=True, help="output .ztxt path")
    p.set_defaults(func=_cmd_encode_prompts)

    p = sub.add_parser(
        "toy-checkpoint",
        help="write a tiny deterministic checkpoint for offline runs",
    )
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--image-size", type=int, default=32)
    p.add_argument("--context-length", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_toy_checkpoint)

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
    except AdapterError as exc:
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
