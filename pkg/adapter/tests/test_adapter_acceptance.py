"""End-to-end conformance: adapter output feeds the segmentation engine.

Each check prints a PASS/FAIL line so a -s run doubles as a conformance
report.
"""

import json
import shutil
import subprocess
import sys
from contextlib import contextmanager

import numpy as np
from PIL import Image

from zeus_adapter import formats

import zeus.embio as zembio
import zeus.prompts as zprompts

from conftest import GOLDEN, SAMPLES


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


def _run(argv):
    proc = subprocess.run(argv, capture_output=True, text=True)
    assert proc.returncode == 0, (
        f"{argv[:2]} exited {proc.returncode}\n{proc.stdout}\n{proc.stderr}"
    )
    return proc.stdout


def test_adapter_conformance(tmp_path, toy_ckpt):
    """Toy checkpoint features drive the engine through its own CLI."""
    with criterion("adapter-conformance"):
        zeus = shutil.which("zeus")
        adapter = shutil.which("zeus-adapter")
        assert zeus and adapter, "console scripts must be installed"

        rng = np.random.default_rng(11)
        slide = tmp_path / "slide.png"
        Image.fromarray(
            rng.integers(0, 256, size=(128, 128, 3), dtype=np.uint8)
        ).save(slide)

        # engine plans the grid; the adapter only consumes the manifest
        grid = tmp_path / "grid.json"
        _run([zeus, "plan", "--slide-id", "conf128",
              "--width", "128", "--height", "128",
              "--patch-size", "32", "--stride", "16", "--out", str(grid)])
        manifest = formats.read_grid_manifest(grid)
        assert len(manifest.tiles) == 49

        patches = tmp_path / "patches.zemb"
        _run([adapter, "encode-patches", "--model", str(toy_ckpt),
              "--grid", str(grid), "--slide", str(slide),
              "--out", str(patches)])

        prompts_file = tmp_path / "prompts.ztxt"
        _run([adapter, "encode-prompts", "--model", str(toy_ckpt),
              "--prompt-spec", str(SAMPLES / "prompts_binary.json"),
              "--out", str(prompts_file)])

        # primary-engine validation: both binaries parse cleanly and the
        # prompt tag matches the engine's own spec hash
        embs = zembio.read_embeddings(patches)
        assert embs.count == 49 and embs.dim == 16
        txt = zembio.read_text_embeddings(prompts_file)
        spec = zprompts.load_prompt_spec(SAMPLES / "prompts_binary.json")
        assert txt.spec_hash == zprompts.spec_hash(spec)

        protos = tmp_path / "prototypes.ztxt"
        _run([zeus, "prototypes", "--prompt-spec",
              str(SAMPLES / "prompts_binary.json"),
              "--text-embeddings", str(prompts_file), "--out", str(protos)])

        out_dir = tmp_path / "seg"
        _run([zeus, "segment", "--grid", str(grid),
              "--embeddings", str(patches), "--prototypes", str(protos),
              "--out-dir", str(out_dir)])

        sidecar = json.loads((out_dir / "mask.json").read_text())
        mask = np.asarray(Image.open(out_dir / "mask.png"))
        assert mask.shape == (7, 7)
        assert set(np.unique(mask)) <= {0, 1}  # full coverage, no NO_LABEL
        assert sidecar == {"stride": 16, "patch_size": 32}
        sim_sidecar = json.loads((out_dir / "similarity.json").read_text())
        assert sim_sidecar["class_ids"] == [0, 1]


def test_prompt_order_golden_fixture(tmp_path):
    """Adapter expansion reproduces the frozen ordering fixture."""
    with criterion("adapter-prompt-order"):
        golden = json.loads(GOLDEN.read_text())
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(golden["spec"]))
        spec = formats.load_prompt_spec(spec_path)
        pairs = [[cid, text] for cid, text in formats.expand_all(spec)]
        assert pairs == golden["pairs"]
        assert formats.spec_hash(spec) == golden["spec_hash"]


def test_python_version_floor():
    assert sys.version_info >= (3, 10)
