import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from cglsal.errors import ChannelError, DecodeError, DimensionMismatch, LayoutError
from cglsal.imgcore import (LAB_NEUTRAL, binarize, load_gray, load_pair,
                            rgb_to_lab, save_gray_png, scan_dataset)


def _write_rgb(path, h, w, value=(120, 40, 200)):
    arr = np.zeros((h, w, 3), dtype=np.uint8)
    arr[:] = value
    Image.fromarray(arr).save(path)


def _write_gray(path, h, w, value=128):
    Image.fromarray(np.full((h, w), value, dtype=np.uint8), mode="L").save(path)


class TestLoadPair:
    def test_loader_identity(self, tmp_path):
        _write_rgb(tmp_path / "a.jpg", 480, 640)
        _write_gray(tmp_path / "a_t.jpg", 480, 640)
        pair = load_pair(tmp_path / "a.jpg", tmp_path / "a_t.jpg")
        assert (pair.width, pair.height) == (640, 480)
        assert pair.rgb.shape == (480, 640, 3)
        assert pair.thermal.shape == (480, 640)
        assert pair.gt is None

    def test_dimension_mismatch(self, tmp_path):
        _write_rgb(tmp_path / "a.png", 480, 640)
        _write_gray(tmp_path / "t.png", 240, 320)
        with pytest.raises(DimensionMismatch):
            load_pair(tmp_path / "a.png", tmp_path / "t.png")

    def test_gt_binarized(self, tmp_path):
        _write_rgb(tmp_path / "a.png", 8, 8)
        _write_gray(tmp_path / "t.png", 8, 8)
        gt = np.zeros((8, 8), dtype=np.uint8)
        gt[:4] = 255
        Image.fromarray(gt, mode="L").save(tmp_path / "gt.png")
        pair = load_pair(tmp_path / "a.png", tmp_path / "t.png", tmp_path / "gt.png")
        assert set(np.unique(pair.gt)) == {0.0, 1.0}

    def test_three_channel_thermal_averaged(self, tmp_path):
        _write_rgb(tmp_path / "a.png", 6, 6)
        _write_rgb(tmp_path / "t.png", 6, 6, value=(30, 60, 90))
        pair = load_pair(tmp_path / "a.png", tmp_path / "t.png")
        assert pair.thermal.shape == (6, 6)
        assert np.allclose(pair.thermal, 60 / 255)

    def test_unreadable_file(self, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not an image")
        _write_gray(tmp_path / "t.png", 4, 4)
        with pytest.raises(DecodeError):
            load_pair(bad, tmp_path / "t.png")


class TestBinarize:
    def test_idempotent(self, rng):
        mask = rng.random((16, 16))
        once = binarize(mask)
        assert np.array_equal(binarize(once), once)

    def test_values(self):
        assert binarize(np.array([0.0, 0.49, 0.5, 1.0])).tolist() == [0, 0, 1, 1]


class TestRgbToLab:
    def test_black(self):
        lab = rgb_to_lab(np.zeros((1, 1, 3)))
        assert lab[0, 0, 0] == pytest.approx(0.0, abs=1e-6)
        assert lab[0, 0, 1] == pytest.approx(LAB_NEUTRAL, abs=1e-3)
        assert lab[0, 0, 2] == pytest.approx(LAB_NEUTRAL, abs=1e-3)

    def test_white(self):
        lab = rgb_to_lab(np.ones((1, 1, 3)))
        assert lab[0, 0, 0] == pytest.approx(1.0, abs=1e-4)
        assert lab[0, 0, 1] == pytest.approx(LAB_NEUTRAL, abs=1e-3)
        assert lab[0, 0, 2] == pytest.approx(LAB_NEUTRAL, abs=1e-3)

    def test_red_reference_values(self):
        # Independent reference: sRGB (1,0,0) -> LAB (53.24, 80.09, 67.20).
        lab = rgb_to_lab(np.array([[[1.0, 0.0, 0.0]]]))
        raw = (lab[0, 0, 0] * 100.0, lab[0, 0, 1] * 255.0 - 128.0,
               lab[0, 0, 2] * 255.0 - 128.0)
        assert raw[0] == pytest.approx(53.24, abs=0.01)
        assert raw[1] == pytest.approx(80.09, abs=0.01)
        assert raw[2] == pytest.approx(67.20, abs=0.01)

    def test_matches_reference_implementation(self, rng):
        from skimage.color import rgb2lab

        rgb = rng.random((5, 7, 3))
        ours = rgb_to_lab(rgb)
        ref = rgb2lab(rgb)
        assert np.allclose(ours[..., 0] * 100.0, ref[..., 0], atol=0.02)
        assert np.allclose(ours[..., 1] * 255.0 - 128.0, ref[..., 1], atol=0.02)
        assert np.allclose(ours[..., 2] * 255.0 - 128.0, ref[..., 2], atol=0.02)

    def test_channel_error(self):
        with pytest.raises(ChannelError):
            rgb_to_lab(np.zeros((4, 4)))

    def test_pixel_local(self, rng):
        rgb = rng.random((4, 6, 3))
        perm = rng.permutation(24)
        flat = rgb.reshape(-1, 3)
        direct = rgb_to_lab(flat[perm].reshape(4, 6, 3))
        permuted = rgb_to_lab(rgb).reshape(-1, 3)[perm].reshape(4, 6, 3)
        assert np.array_equal(direct, permuted)

    @settings(deadline=None, max_examples=30)
    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_grayscale_is_neutral(self, v):
        lab = rgb_to_lab(np.full((1, 1, 3), v))
        assert abs(lab[0, 0, 1] - LAB_NEUTRAL) < 1e-3
        assert abs(lab[0, 0, 2] - LAB_NEUTRAL) < 1e-3


class TestScanDataset:
    def _layout(self, root, rgb=(), t=(), gt=()):
        for sub, stems in (("RGB", rgb), ("T", t), ("GT", gt)):
            d = root / sub
            d.mkdir(parents=True, exist_ok=True)
            for stem in stems:
                if sub == "RGB":
                    _write_rgb(d / f"{stem}.png", 4, 4)
                else:
                    _write_gray(d / f"{stem}.png", 4, 4)

    def test_intersection_with_gt(self, tmp_path):
        self._layout(tmp_path, rgb=("a", "b"), t=("a", "b"), gt=("a",))
        entries = scan_dataset(tmp_path)
        assert [e.id for e in entries] == ["a", "b"]
        assert entries[0].gt is not None
        assert entries[1].gt is None

    def test_empty_root(self, tmp_path):
        with pytest.raises(LayoutError):
            scan_dataset(tmp_path)

    def test_no_common_stem(self, tmp_path):
        self._layout(tmp_path, rgb=("a",), t=("b",))
        assert scan_dataset(tmp_path) == []


class TestPngRoundTrip:
    def test_saliency_write_read(self, tmp_path, rng):
        raster = rng.random((9, 13))
        save_gray_png(tmp_path / "s.png", raster)
        back = load_gray(tmp_path / "s.png")
        assert np.abs(back - raster).max() <= 0.5 / 255 + 1e-9

    def test_quantization_rounds_to_nearest(self, tmp_path):
        save_gray_png(tmp_path / "s.png", np.array([[0.0, 0.4999, 0.5001, 1.0]]))
        data = np.asarray(Image.open(tmp_path / "s.png"))
        assert data.tolist() == [[0, 127, 128, 255]]
