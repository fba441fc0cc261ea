"""Synthetic known-answer fixtures: mixing math, oracles, artifact bundles."""

import numpy as np
import pytest

from zeus import embio, metrics, phantom, simcore, tiling
from zeus.errors import InvalidSpec
from zeus.metrics import GroundTruthMask
from zeus.prompts import ClassPrototype
from zeus.tiling import SlideGeometry


def _basis_protos(dim=8):
    n = np.zeros(dim)
    n[0] = 1.0
    t = np.zeros(dim)
    t[1] = 1.0
    return (
        ClassPrototype(class_id=0, dim=dim, vector=n, norm_policy=None),
        ClassPrototype(class_id=1, dim=dim, vector=t, norm_policy=None),
    )


def _spec(width=100, height=80, rect=(20, 20, 60, 60), sigma=0.0, seed=0, dim=8):
    return phantom.PhantomSpec(
        geometry=SlideGeometry(slide_id="ph", width_px=width, height_px=height),
        tumor_rect=rect,
        prototypes=_basis_protos(dim),
        noise_sigma=sigma,
        seed=seed,
    )


def _grid(spec, patch=20, stride=10):
    return tiling.plan_tiles(spec.geometry, patch, stride=stride)


class TestSpecValidation:
    def test_rect_outside_slide(self):
        with pytest.raises(InvalidSpec):
            _spec(rect=(20, 20, 120, 60))
        with pytest.raises(InvalidSpec):
            _spec(rect=(-1, 0, 10, 10))
        with pytest.raises(InvalidSpec):
            _spec(rect=(30, 20, 20, 60))  # empty x range

    def test_negative_sigma(self):
        with pytest.raises(InvalidSpec):
            _spec(sigma=-0.1)

    def test_collinear_prototypes(self):
        v = np.ones(8)
        protos = (
            ClassPrototype(class_id=0, dim=8, vector=v, norm_policy=None),
            ClassPrototype(class_id=1, dim=8, vector=2.0 * v, norm_policy=None),
        )
        with pytest.raises(InvalidSpec):
            phantom.PhantomSpec(
                geometry=SlideGeometry(slide_id="s", width_px=50, height_px=50),
                tumor_rect=(0, 0, 25, 25),
                prototypes=protos,
            )

    def test_generated_prototypes_not_collinear(self):
        for seed in range(5):
            protos = phantom.make_phantom_prototypes(seed, 32)
            assert simcore.cosine(protos[0].vector, protos[1].vector) < 0.99
            assert abs(np.linalg.norm(protos[0].vector) - 1.0) <= 1e-6


class TestFractions:
    def test_matches_pixel_count(self):
        spec = _spec()
        grid = _grid(spec)
        frac = phantom.tumor_fractions(spec, grid)
        x0, y0, x1, y1 = spec.tumor_rect
        raster = np.zeros((80, 100), dtype=np.int64)
        raster[y0:y1, x0:x1] = 1
        for row, (tid, x, y) in enumerate(grid.tiles):
            inside = int(raster[y:y + 20, x:x + 20].sum())
            assert frac[row] == inside / 400.0

    def test_extremes(self):
        spec = _spec(rect=(0, 0, 20, 20))
        grid = _grid(spec)
        frac = phantom.tumor_fractions(spec, grid)
        assert frac[0] == 1.0  # tile at (0, 0) is fully tumor
        assert frac[-1] == 0.0  # far corner never touches the rect


class TestMixing:
    def test_cosine_monotone_in_fraction(self):
        # noiseless: tumor-prototype cosine grows with the tumor fraction
        protos = _basis_protos()
        sims = []
        for f in (0.0, 0.25, 0.5, 0.75, 1.0):
            vec = (1 - f) * protos[0].vector + f * protos[1].vector
            vec /= np.linalg.norm(vec)
            sims.append(simcore.cosine(vec, protos[1].vector))
        assert all(b > a for a, b in zip(sims, sims[1:]))

    def test_pure_tiles_hit_prototypes(self):
        spec = _spec(rect=(0, 0, 20, 20))
        grid = _grid(spec)
        embs = phantom.generate_phantom(spec, grid)
        protos = spec.prototypes
        # tile 0 fully inside the rect, last tile fully outside
        assert abs(simcore.cosine(embs.vectors[0], protos[1].vector) - 1.0) <= 1e-6
        assert abs(simcore.cosine(embs.vectors[-1], protos[0].vector) - 1.0) <= 1e-6

    def test_unit_norm_output(self):
        spec = _spec(sigma=0.05)
        embs = phantom.generate_phantom(spec, _grid(spec))
        norms = np.linalg.norm(embs.vectors.astype(np.float64), axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-6

    def test_deterministic(self):
        spec = _spec(sigma=0.05, seed=3)
        grid = _grid(spec)
        a = phantom.generate_phantom(spec, grid)
        b = phantom.generate_phantom(spec, grid)
        assert np.array_equal(a.vectors, b.vectors)
        assert a.model_id == "phantom-mixer"

    def test_seed_changes_noise(self):
        grid = _grid(_spec())
        a = phantom.generate_phantom(_spec(sigma=0.05, seed=0), grid)
        b = phantom.generate_phantom(_spec(sigma=0.05, seed=1), grid)
        assert not np.array_equal(a.vectors, b.vectors)


class TestOracle:
    def test_matches_resample_on_materialized_raster(self):
        # the analytic oracle must agree with the metrics resampler run on a
        # full-resolution rasterization of the same rectangle
        for rect in ((20, 20, 60, 60), (5, 10, 97, 33), (0, 0, 100, 80)):
            spec = _spec(rect=rect)
            grid = _grid(spec)
            cells = phantom.oracle_cells(spec, grid)
            bits = np.zeros((80, 100), dtype=np.uint8)
            x0, y0, x1, y1 = rect
            bits[y0:y1, x0:x1] = 1
            gt = GroundTruthMask(100, 80, bits)
            assert np.array_equal(cells, metrics.resample_gt(gt, grid))

    def test_acceptance_geometry(self):
        spec = phantom.PhantomSpec(
            geometry=SlideGeometry(slide_id="big", width_px=4480, height_px=4480),
            tumor_rect=(1120, 1120, 3360, 3360),
            prototypes=phantom.make_phantom_prototypes(0, 32),
        )
        grid = tiling.plan_tiles(spec.geometry, 448, stride=112)
        assert grid.num_tiles == 37 * 37
        cells = phantom.oracle_cells(spec, grid)
        assert cells.shape == (37, 37)
        # rect edges are stride-aligned, so the oracle is a crisp block
        assert cells.sum() == 20 * 20
        assert np.array_equal(np.unique(cells[10:30, 10:30]), [1])


class TestFixtureBundle:
    def test_files_and_rewrite_determinism(self, tmp_path):
        spec = _spec(sigma=0.02, seed=5)
        grid = _grid(spec)
        paths = phantom.write_fixture(spec, grid, tmp_path / "a")
        for p in paths.values():
            assert p.is_file()
        first = {k: p.read_bytes() for k, p in paths.items()}
        again = phantom.write_fixture(spec, grid, tmp_path / "b")
        for k, p in again.items():
            assert p.read_bytes() == first[k], k

    def test_bundle_contents_consistent(self, tmp_path):
        spec = _spec()
        grid = _grid(spec)
        paths = phantom.write_fixture(spec, grid, tmp_path)
        embs = embio.read_embeddings(paths["embeddings"])
        assert embs.count == grid.num_tiles
        assert embs.dim == 8
        protos = embio.read_text_embeddings(paths["prototypes"])
        assert protos.class_ids.tolist() == [0, 1]
        mask = simcore.load_mask(paths["oracle_mask"])
        assert np.array_equal(mask.labels, phantom.oracle_cells(spec, grid))
        import json

        doc = json.loads(paths["oracle"].read_bytes())
        assert doc["tumor_rect"] == [20, 20, 60, 60]
        assert doc["expected_mask_path"] == "oracle_mask.png"

    def test_noiseless_end_to_end_dsc(self, tmp_path):
        # small phantom straight through score -> accumulate -> argmax
        spec = _spec(rect=(20, 20, 60, 60))
        grid = _grid(spec)
        embs = phantom.generate_phantom(spec, grid)
        scores = simcore.score_tiles(embs, list(spec.prototypes))
        sim = simcore.accumulate_grid(grid, scores)
        pred = simcore.argmax_mask(sim)
        cells = phantom.oracle_cells(spec, grid)
        tp, fp, fn, tn = metrics.confusion(pred, cells)
        assert metrics.dsc(tp, fp, fn) >= 0.9
