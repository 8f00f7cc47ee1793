import numpy as np
import pytest
from PIL import Image

from palette_quant.errors import (
    EmptyInputError,
    ImageReadError,
    ImageWriteError,
    TruncatedImageError,
    UnsupportedFormatError,
)
from palette_quant.core.palette import Palette
from palette_quant.imaging.imageio import RawImage, encode_ppm, format_palette, load_image, save_image, write_palette


def test_load_ppm_black_2x2(tmp_path):
    path = tmp_path / "black.ppm"
    path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
    img = load_image(path)
    assert (img.width, img.height) == (2, 2)
    assert img.pixels.shape == (4, 3)
    assert not img.pixels.any()


def test_load_ppm_with_header_comment(tmp_path):
    path = tmp_path / "c.ppm"
    path.write_bytes(b"P6\n# made by hand\n1 2\n255\n" + bytes([1, 2, 3, 4, 5, 6]))
    img = load_image(path)
    assert img.pixels.tolist() == [[1, 2, 3], [4, 5, 6]]


def test_load_ppm_16bit_rejected(tmp_path):
    path = tmp_path / "deep.ppm"
    path.write_bytes(b"P6\n1 1\n65535\n" + bytes(6))
    with pytest.raises(UnsupportedFormatError, match="unsupported bit depth"):
        load_image(path)


def test_load_ppm_truncated(tmp_path):
    path = tmp_path / "short.ppm"
    path.write_bytes(b"P6\n2 2\n255\n" + bytes(5))
    with pytest.raises(TruncatedImageError):
        load_image(path)


def test_load_ascii_ppm_rejected(tmp_path):
    path = tmp_path / "ascii.ppm"
    path.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(UnsupportedFormatError):
        load_image(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(ImageReadError):
        load_image(tmp_path / "nope.png")


def test_load_unknown_format(tmp_path):
    path = tmp_path / "x.gif"
    path.write_bytes(b"GIF89a....")
    with pytest.raises(UnsupportedFormatError):
        load_image(path)


def test_load_png_rgba_strips_alpha(tmp_path, caplog):
    path = tmp_path / "rgba.png"
    Image.fromarray(np.array([[[10, 20, 30, 128]]], dtype=np.uint8)).save(path)
    with caplog.at_level("WARNING", logger="PaletteQuant"):
        img = load_image(path)
    assert (img.width, img.height) == (1, 1)
    assert img.pixels.tolist() == [[10, 20, 30]]
    assert any("alpha" in r.message for r in caplog.records)


def test_load_png_16bit_rejected(tmp_path):
    path = tmp_path / "deep.png"
    Image.fromarray(np.full((2, 2), 4000, dtype=np.uint16)).save(path)
    with pytest.raises(UnsupportedFormatError, match="unsupported bit depth"):
        load_image(path)


def test_load_png_grayscale_rejected(tmp_path):
    path = tmp_path / "gray.png"
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8)).save(path)
    with pytest.raises(UnsupportedFormatError):
        load_image(path)


@pytest.mark.parametrize("suffix", [".png", ".ppm"])
def test_save_then_load_identical(tmp_path, small_image, suffix):
    path = tmp_path / f"img{suffix}"
    save_image(small_image, path)
    back = load_image(path)
    assert (back.width, back.height) == (small_image.width, small_image.height)
    np.testing.assert_array_equal(back.pixels, small_image.pixels)


def test_white_pixel_ppm_bytes(tmp_path):
    img = RawImage(width=1, height=1, pixels=np.array([[255, 255, 255]], dtype=np.uint8))
    assert encode_ppm(img) == b"P6\n1 1\n255\n\xff\xff\xff"
    path = tmp_path / "white.ppm"
    save_image(img, path)
    assert path.read_bytes() == b"P6\n1 1\n255\n\xff\xff\xff"


def test_save_to_missing_directory(tmp_path, small_image):
    with pytest.raises(ImageWriteError):
        save_image(small_image, tmp_path / "missing" / "out.png")


def test_raw_image_rejects_wrong_length():
    with pytest.raises(ValueError):
        RawImage(width=2, height=2, pixels=np.zeros((3, 3), dtype=np.uint8))


def test_raw_image_pixels_read_only(small_image):
    with pytest.raises(ValueError):
        small_image.pixels[0, 0] = 1


def test_palette_file_format(tmp_path):
    path = tmp_path / "pal.txt"
    write_palette(Palette(np.array([[0, 0, 0], [255, 255, 255]])), path)
    assert path.read_text() == "0 0 0\n255 255 255\n"


def test_palette_rounds_half_up():
    assert format_palette([[127.5, 0.0, 0.4999]]) == "128 0 0\n"


def test_palette_empty_rejected(tmp_path):
    with pytest.raises(EmptyInputError):
        write_palette(np.empty((0, 3)), tmp_path / "pal.txt")
