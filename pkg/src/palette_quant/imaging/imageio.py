"""Raster and palette file I/O.

PPM (P6, maxval 255) is decoded and encoded by hand so the byte layout is
exact; PNG goes through Pillow after the IHDR chunk has been checked for
8-bit truecolor.
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import (
    EmptyInputError,
    ImageReadError,
    ImageWriteError,
    TruncatedImageError,
    UnsupportedFormatError,
)
from ..utils.helpers import round_half_up
from ..utils.logging import Icons, pretty_log

logger = logging.getLogger("PaletteQuant")

PathLike = Union[str, Path]

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
PNG_COLOR_RGB = 2
PNG_COLOR_RGBA = 6


@dataclass(frozen=True)
class RawImage:
    width: int
    height: int
    pixels: np.ndarray  # (width*height, 3) uint8, row-major

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"Image dimensions must be positive, got {self.width}x{self.height}")
        pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8).reshape(-1, 3)
        if pixels.shape[0] != self.width * self.height:
            raise ValueError(
                f"Pixel count {pixels.shape[0]} does not match {self.width}x{self.height}"
            )
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    def grid(self) -> np.ndarray:
        """(height, width, 3) view of the pixels."""
        return self.pixels.reshape(self.height, self.width, 3)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "RawImage":
        array = np.asarray(array)
        if array.ndim != 3 or array.shape[2] != 3:
            raise ValueError(f"Expected an (H, W, 3) array, got shape {array.shape}")
        if array.dtype != np.uint8:
            if array.min() < 0 or array.max() > 255:
                raise ValueError("Channel values must lie in [0, 255]")
            array = array.astype(np.uint8)
        h, w = array.shape[:2]
        return cls(width=w, height=h, pixels=array.reshape(-1, 3))


def _read_ppm_token(data: bytes, pos: int) -> Tuple[bytes, int]:
    n = len(data)
    while pos < n:
        if data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif data[pos:pos + 1].isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise TruncatedImageError("truncated PPM header")
    return data[start:pos], pos


def _decode_ppm(data: bytes, path: Path) -> RawImage:
    magic, pos = _read_ppm_token(data, 0)
    if magic != b"P6":
        raise UnsupportedFormatError(f"{path}: unsupported PPM variant {magic!r} (only binary P6)")
    fields = []
    for _ in range(3):
        token, pos = _read_ppm_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise ImageReadError(f"{path}: malformed PPM header field {token!r}") from None
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedFormatError(f"{path}: unsupported bit depth (maxval {maxval})")
    if width < 1 or height < 1:
        raise ImageReadError(f"{path}: invalid PPM dimensions {width}x{height}")
    # Exactly one whitespace byte separates the header from the raster
    pos += 1
    expected = width * height * 3
    raster = data[pos:pos + expected]
    if len(raster) < expected:
        raise TruncatedImageError(
            f"{path}: truncated data ({len(raster)} of {expected} raster bytes)"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(-1, 3)
    return RawImage(width=width, height=height, pixels=pixels)


def _check_png_header(data: bytes, path: Path) -> int:
    if len(data) < 33:
        raise TruncatedImageError(f"{path}: truncated data (PNG header incomplete)")
    length, chunk_type = struct.unpack(">I4s", data[8:16])
    if chunk_type != b"IHDR" or length != 13:
        raise ImageReadError(f"{path}: PNG does not start with an IHDR chunk")
    bit_depth, color_type = data[24], data[25]
    if bit_depth != 8:
        raise UnsupportedFormatError(f"{path}: unsupported bit depth ({bit_depth}-bit PNG)")
    if color_type not in (PNG_COLOR_RGB, PNG_COLOR_RGBA):
        raise UnsupportedFormatError(f"{path}: unsupported color type {color_type} (need truecolor)")
    return color_type


def _decode_png(data: bytes, path: Path) -> RawImage:
    color_type = _check_png_header(data, path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            array = np.asarray(im)
    except (UnidentifiedImageError, SyntaxError) as e:
        raise ImageReadError(f"{path}: {e}") from e
    except OSError as e:
        if "truncated" in str(e).lower():
            raise TruncatedImageError(f"{path}: truncated data ({e})") from e
        raise ImageReadError(f"{path}: {e}") from e

    if color_type == PNG_COLOR_RGBA or mode == "RGBA":
        logger.warning(f"{path}: alpha channel discarded (image treated as opaque RGB)")
        pretty_log("Alpha Stripped", str(path), icon=Icons.WARN, level="WARN")
        array = array[:, :, :3]
    elif mode != "RGB":
        raise UnsupportedFormatError(f"{path}: unsupported color type (decoded mode {mode})")
    return RawImage.from_array(np.ascontiguousarray(array))


def load_image(path: PathLike) -> RawImage:
    path = Path(path)
    pretty_log("Image Read", path.name, icon=Icons.IMG_READ)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ImageReadError(f"{path}: unreadable file ({e.strerror or e})") from e

    if data.startswith(PNG_SIGNATURE):
        return _decode_png(data, path)
    if data[:1] == b"P":
        return _decode_ppm(data, path)
    raise UnsupportedFormatError(f"{path}: unrecognized image format (need PNG or binary PPM)")


def encode_ppm(img: RawImage) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def save_image(img: RawImage, path: PathLike) -> None:
    path = Path(path)
    pretty_log("Image Write", path.name, icon=Icons.IMG_WRITE)
    try:
        if path.suffix.lower() in (".ppm", ".pnm"):
            path.write_bytes(encode_ppm(img))
        else:
            Image.fromarray(np.ascontiguousarray(img.grid())).save(path, format="PNG")
    except OSError as e:
        raise ImageWriteError(f"{path}: {e}") from e


def format_palette(centers) -> str:
    rendered = round_half_up(np.asarray(centers, dtype=np.float64).reshape(-1, 3))
    return "".join(f"{r} {g} {b}\n" for r, g, b in rendered.tolist())


def write_palette(palette, path: PathLike) -> None:
    """Writes one "R G B" line per palette color, in palette order."""
    centers = getattr(palette, "centers", palette)
    if centers is None or len(centers) == 0:
        raise EmptyInputError("cannot write an empty palette")
    path = Path(path)
    try:
        path.write_text(format_palette(centers))
    except OSError as e:
        raise ImageWriteError(f"{path}: {e}") from e
