import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from zeus_adapter import checkpoints

REPO_ROOT = Path(__file__).parents[2]
GOLDEN = REPO_ROOT / "tests" / "fixtures" / "prompt_order.json"
SAMPLES = REPO_ROOT / "samples"


@pytest.fixture(scope="session")
def toy_ckpt(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("ckpt") / "toy.pt"
    checkpoints.make_test_checkpoint(
        path, embed_dim=16, image_size=16, context_length=48, seed=1
    )
    return path


@pytest.fixture(scope="session")
def golden() -> dict:
    return json.loads(GOLDEN.read_text())


def make_slide(path: Path, width: int, height: int, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 255, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(pixels).save(path)


def make_manifest(path: Path, slide_id: str, width: int, height: int,
                  patch: int, stride: int) -> list:
    """Hand-rolled grid manifest with the dense row-major tile lattice."""
    xs = list(range(0, width - patch + 1, stride))
    ys = list(range(0, height - patch + 1, stride))
    tiles = [
        [j * len(xs) + i, x, y]
        for j, y in enumerate(ys)
        for i, x in enumerate(xs)
    ]
    doc = {
        "schema": "zeus-grid/1",
        "slide": {"id": slide_id, "width_px": width, "height_px": height,
                  "magnification": 10.0},
        "patch_size": patch,
        "stride": stride,
        "tiles": tiles,
    }
    path.write_text(json.dumps(doc))
    return tiles
