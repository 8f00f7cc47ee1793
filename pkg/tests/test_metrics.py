import math

import numpy as np
import pytest

from palette_quant.core.metrics import QuantReport, format_float, map_pixels, mse, psnr
from palette_quant.core.palette import Palette
from palette_quant.errors import EmptyInputError, InvalidParameterError
from palette_quant.imaging.imageio import RawImage


def _img(rows):
    px = np.asarray(rows, dtype=np.uint8)
    return RawImage(width=px.shape[0], height=1, pixels=px)


def test_map_pixel_to_nearer_color():
    mapped = map_pixels(_img([(10, 10, 10)]), Palette(np.array([[0, 0, 0], [255, 255, 255]])))
    assert mapped.indices.tolist() == [0]
    assert mapped.quantized.pixels.tolist() == [[0, 0, 0]]


def test_map_pixel_equal_to_palette_color():
    pal = Palette(np.array([[0, 0, 0], [40, 50, 60], [255, 255, 255]]))
    mapped = map_pixels(_img([(40, 50, 60)]), pal)
    assert mapped.indices.tolist() == [1]
    assert mapped.reconstruction.tolist() == [[40.0, 50.0, 60.0]]


def test_map_pixels_matches_brute_force(gradient_image):
    rng = np.random.default_rng(4)
    centers = rng.integers(0, 256, size=(20, 3)).astype(np.float64)
    centers[7] = centers[3]  # duplicate entry must never win over the lower index
    mapped = map_pixels(gradient_image, Palette(centers))
    px = gradient_image.pixels.astype(np.float64)
    d2 = ((px[:, None, :] - centers[None]) ** 2).sum(-1)
    np.testing.assert_array_equal(mapped.indices, np.argmin(d2, axis=1))
    assert 7 not in set(mapped.indices.tolist())
    assert mapped.unique_colors == np.unique(gradient_image.pixels, axis=0).shape[0]


def test_map_pixels_renders_half_up(small_image):
    mapped = map_pixels(small_image, Palette(np.array([[127.5, 0.2, 254.6]])))
    assert set(map(tuple, mapped.quantized.pixels.tolist())) == {(128, 0, 255)}


def test_map_pixels_empty_palette(small_image):
    with pytest.raises(EmptyInputError):
        map_pixels(small_image, np.empty((0, 3)))


def test_mse_identical_is_zero(small_image):
    assert mse(small_image, small_image) == 0.0


def test_mse_hand_example():
    assert mse(_img([(0, 0, 0), (10, 0, 0)]), _img([(0, 0, 0), (8, 0, 0)])) == 2.0


def test_mse_black_vs_white():
    assert mse(_img([(0, 0, 0)] * 4), _img([(255, 255, 255)] * 4)) == 195075.0


def test_mse_dimension_mismatch():
    with pytest.raises(InvalidParameterError):
        mse(_img([(0, 0, 0)]), _img([(0, 0, 0), (1, 1, 1)]))
    tall = RawImage(width=1, height=2, pixels=np.zeros((2, 3), dtype=np.uint8))
    with pytest.raises(InvalidParameterError):
        mse(_img([(0, 0, 0), (0, 0, 0)]), tall)


def test_mse_accepts_real_reconstruction(small_image):
    recon = small_image.pixels.astype(np.float64) + 0.5
    assert mse(small_image, recon) == pytest.approx(0.75)


def test_psnr_values():
    assert psnr(255.0 ** 2) == pytest.approx(0.0, abs=1e-12)
    assert psnr(100.0) == pytest.approx(28.1308, abs=1e-4)
    assert math.isinf(psnr(0.0))


def test_psnr_negative_rejected():
    with pytest.raises(InvalidParameterError):
        psnr(-1.0)


def test_format_float():
    assert format_float(math.inf) == "inf"
    assert format_float(2.5) == "2.5"


def test_report_serialization():
    report = QuantReport(method="wu", k_requested=4, k_actual=3, mse=0.0, psnr=math.inf,
                         time_ms=12.3456, seed=None, image="a.png", flags=["short_palette"])
    data = report.to_dict()
    assert data["psnr"] == "inf"
    assert '"psnr": "inf"' in report.to_json()
    row = report.csv_row(run=2)
    assert row["run"] == "2"
    assert row["seed"] == ""
    assert row["time_ms"] == "12.346"
    assert row["flags"] == "short_palette"
    assert report.csv_row(record_time=False)["time_ms"] == ""
