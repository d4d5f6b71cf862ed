"""Grayscale image I/O (PGM P2/P5, PNG) and PSNR."""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import CorruptHeader, IoFailure, ShapeMismatch, UnsupportedFormat


@dataclass(eq=False)
class Image:
    """Float pixels (row-major, shape ``(height, width)``) with their nominal bit depth."""

    pixels: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2 or 0 in self.pixels.shape:
            raise ShapeMismatch("an image is a non-empty 2-d array")
        if self.bit_depth not in (8, 16):
            raise UnsupportedFormat(f"bit depth {self.bit_depth} (expected 8 or 16)")
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("pixels must be finite")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def peak(self) -> int:
        return 255 if self.bit_depth == 8 else 65535


def _pgm_tokens(data: bytes, count: int):
    """First ``count`` header tokens and the offset just past the last one."""
    tokens, i = [], 0
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        if j == i:
            raise CorruptHeader("truncated PGM header")
        tokens.append(data[i:j])
        i = j
    return tokens, i


def _parse_pgm(data: bytes) -> Image:
    (magic, w, h, maxval), end = _pgm_tokens(data, 4)
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise CorruptHeader(f"non-numeric PGM header field: {exc}") from None
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise CorruptHeader(f"bad PGM dimensions {w}x{h} or maxval {maxval}")
    depth = 8 if maxval < 256 else 16
    if magic == b"P5":
        body = data[end + 1 :]  # exactly one whitespace byte after maxval
        dtype = np.uint8 if depth == 8 else np.dtype(">u2")
        need = w * h * np.dtype(dtype).itemsize
        if len(body) < need:
            raise CorruptHeader(f"PGM body holds {len(body)} bytes, expected {need}")
        px = np.frombuffer(body[:need], dtype=dtype).reshape(h, w)
    elif magic == b"P2":
        try:
            px = np.array(data[end:].split(), dtype=np.int64)
        except ValueError:
            raise CorruptHeader("non-numeric sample in ASCII PGM") from None
        if px.size < w * h:
            raise CorruptHeader(f"ASCII PGM holds {px.size} samples, expected {w * h}")
        px = px[: w * h].reshape(h, w)
    else:
        raise UnsupportedFormat(f"PGM magic {magic!r} (expected P2 or P5)")
    if px.max() > maxval:
        raise CorruptHeader("sample exceeds maxval")
    return Image(px.astype(float), depth)


def _read_png(path) -> Image:
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        if im.mode == "L":
            depth = 8
        elif im.mode in ("I;16", "I;16B", "I;16L", "I"):
            depth = 16
        else:
            raise UnsupportedFormat(f"PNG mode {im.mode}: only grayscale is supported")
        px = np.array(im, dtype=float)
    return Image(px, depth)


def read_image(path) -> Image:
    """Read a PGM (P2/P5, maxval up to 65535) or grayscale PNG file."""
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(8)
            if head.startswith(b"\x89PNG"):
                fh.close()
                return _read_png(path)
            data = head + fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if data[:1] != b"P":
        raise UnsupportedFormat(f"{path}: neither PGM nor PNG")
    return _parse_pgm(data)


def quantize(pixels, bit_depth: int = 8) -> np.ndarray:
    """Round and clip to the integer range of ``bit_depth``."""
    peak = 255 if bit_depth == 8 else 65535
    return np.clip(np.rint(np.asarray(pixels, dtype=float)), 0, peak).astype(np.uint8 if bit_depth == 8 else np.uint16)


def write_image(image: Image, path, ascii: bool = False) -> None:
    """Write ``image``; the format follows the extension (``.png`` or PGM otherwise).

    Pixels are rounded and clipped to the bit depth first.
    """
    path = os.fspath(path)
    q = quantize(image.pixels, image.bit_depth)
    h, w = q.shape
    try:
        if path.lower().endswith(".png"):
            from PIL import Image as PILImage

            im = PILImage.fromarray(q)
            im.save(path, format="PNG")
            return
        maxval = image.peak
        with open(path, "wb") as fh:
            if ascii:
                fh.write(f"P2\n{w} {h}\n{maxval}\n".encode())
                for row in q:
                    fh.write((" ".join(map(str, row.tolist())) + "\n").encode())
            else:
                fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
                fh.write(q.astype(">u2").tobytes() if image.bit_depth == 16 else q.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def psnr(a, b, peak: float = 255.0) -> float:
    """``10 log10(peak^2 / MSE)``; ``inf`` for identical inputs."""
    a = a.pixels if isinstance(a, Image) else np.asarray(a, dtype=float)
    b = b.pixels if isinstance(b, Image) else np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return float("inf")
    return 10.0 * np.log10(peak**2 / mse)


def load_test_image(size: int = 256) -> np.ndarray:
    """Bundled 8-bit natural test image, 512x512 or its 256x256 2x2-mean reduction."""
    if size not in (256, 512):
        raise ValueError("size must be 256 or 512")
    data = resources.files("nlridge").joinpath("data/cameraman512.pgm").read_bytes()
    img = _parse_pgm(data).pixels
    if size == 256:
        img = img.reshape(256, 2, 256, 2).mean(axis=(1, 3)).round()
    return img
