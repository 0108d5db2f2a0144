"""Image carriers, quantization and file I/O shared by every analysis."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TXF_MAGIC = b"TXF1"
_TXF_HEADER = struct.Struct("<4sII")

U64_MAX = 2**64 - 1


class ImageFormatError(ValueError):
    """Raised for unreadable, truncated or unsupported image files."""


class DegenerateInputError(ValueError):
    """Raised when an input has no variation where variation is required."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable 2D real-valued image, stored as a (height, width) float64 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise ValueError(f"GrayImage needs a 2D array, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("GrayImage has a zero dimension")
        if not np.all(np.isfinite(arr)):
            raise ValueError("GrayImage values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class QuantizedImage:
    """Integer gray-level codes in ``[0, levels)``."""

    data: np.ndarray
    levels: int

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        arr = np.array(self.data, dtype=np.intp, order="C", copy=True)
        if arr.ndim != 2:
            raise ValueError("QuantizedImage needs a 2D array")
        if arr.size and (arr.min() < 0 or arr.max() >= self.levels):
            raise ValueError("codes must lie in [0, levels)")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= U64_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; the same seed always yields the same stream."""
    return np.random.default_rng(check_seed(seed))


def quantize_array(values, levels: int, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Equal-width binning of ``[lo, hi]`` into ``levels`` codes.

    ``lo``/``hi`` default to the min/max of ``values``. The top edge belongs to
    the last bin and a zero-width range maps everything to code 0.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return np.zeros(v.shape, dtype=np.intp)
    lo = float(v.min()) if lo is None else float(lo)
    hi = float(v.max()) if hi is None else float(hi)
    span = hi - lo
    if not span > 0:
        return np.zeros(v.shape, dtype=np.intp)
    codes = np.floor((v - lo) * levels / span)
    np.clip(codes, 0, levels - 1, out=codes)
    return codes.astype(np.intp)


def quantize(img: GrayImage, levels: int) -> QuantizedImage:
    """Quantize over the image's own [min, max] range."""
    return QuantizedImage(quantize_array(img.data, levels), levels)


# --- file I/O ---------------------------------------------------------------

def _read_pnm_header(buf: bytes):
    """Parse a P5 header, returning (width, height, maxval, data offset)."""
    fields = []
    pos = 2
    n = len(buf)
    while len(fields) < 3:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        token = buf[start:pos]
        if not token.isdigit():
            raise ImageFormatError(f"bad PGM header field {token!r}")
        fields.append(int(token))
    if pos >= n:
        raise ImageFormatError("truncated PGM header")
    # exactly one whitespace byte separates header and raster
    return fields[0], fields[1], fields[2], pos + 1


def _load_pgm(buf: bytes) -> np.ndarray:
    width, height, maxval, offset = _read_pnm_header(buf)
    if width == 0 or height == 0:
        raise ImageFormatError("zero image dimension")
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"invalid PGM maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    need = count * dtype.itemsize
    if len(buf) - offset < need:
        raise ImageFormatError("truncated PGM raster")
    raster = np.frombuffer(buf, dtype=dtype, count=count, offset=offset)
    return raster.reshape(height, width).astype(np.float64) / maxval


def _load_txf(buf: bytes) -> np.ndarray:
    if len(buf) < _TXF_HEADER.size:
        raise ImageFormatError("truncated TXF header")
    _, width, height = _TXF_HEADER.unpack_from(buf)
    if width == 0 or height == 0:
        raise ImageFormatError("zero image dimension")
    need = _TXF_HEADER.size + 8 * width * height
    if len(buf) < need:
        raise ImageFormatError("truncated TXF data")
    data = np.frombuffer(buf, dtype="<f8", count=width * height, offset=_TXF_HEADER.size)
    return data.reshape(height, width).astype(np.float64)


def _load_png(path: Path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                return np.asarray(im, dtype=np.float64) / 255.0
            if mode == "1":
                return np.asarray(im, dtype=np.float64)
            if mode.startswith("I;16") or mode == "I":
                arr = np.asarray(im).astype(np.float64)
                return arr / 65535.0
    except (OSError, SyntaxError) as exc:
        raise ImageFormatError(f"cannot read PNG: {exc}") from exc
    raise ImageFormatError(f"unsupported format: PNG mode {mode} is not grayscale")


def load_image(path) -> GrayImage:
    """Read a P5 PGM (8/16 bit), grayscale PNG or TXF file.

    Integer formats are scaled to [0, 1] by their maximum value; TXF data is
    returned verbatim.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf.startswith(TXF_MAGIC):
        arr = _load_txf(buf)
    elif buf.startswith(b"P5"):
        arr = _load_pgm(buf)
    elif buf.startswith(b"\x89PNG"):
        arr = _load_png(path)
    else:
        raise ImageFormatError(f"unsupported format: {path.name}")
    try:
        return GrayImage(arr)
    except ValueError as exc:
        raise ImageFormatError(str(exc)) from exc


def format_for_path(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".txf":
        return "txf"
    if suffix in (".pgm", ".pnm"):
        return "pgm8"
    raise ValueError(f"cannot infer output format from {path!s}; use .txf or .pgm")


def save_image(img: GrayImage, path, format: str | None = None) -> None:
    """Write ``img`` as TXF (lossless) or 8-bit PGM (clamped to [0, 1])."""
    format = format or format_for_path(path)
    if format == "txf":
        payload = _TXF_HEADER.pack(TXF_MAGIC, img.width, img.height)
        payload += img.data.astype("<f8").tobytes()
    elif format == "pgm8":
        raster = np.rint(np.clip(img.data, 0.0, 1.0) * 255.0).astype(np.uint8)
        payload = f"P5\n{img.width} {img.height}\n255\n".encode("ascii") + raster.tobytes()
    else:
        raise ValueError(f"unknown image format {format!r}")
    with open(path, "wb") as fh:
        fh.write(payload)
