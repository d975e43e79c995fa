"""Image loading, binarization, resampling and dataset cataloguing.

Images are held as 2-D numpy arrays indexed ``[row, column]``; the wrapper
dataclasses only add validation.  PGM and PNG are decoded here directly
(PNG through :mod:`zlib`) so that no imaging library is needed at runtime.
"""

from __future__ import annotations

import csv
import enum
import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .errors import (
    AmbiguousLayout,
    CorruptImage,
    DegenerateSpec,
    EmptyDataset,
    ImageNotFound,
    UnknownSubcategory,
    UnsupportedFormat,
    ZeroDimension,
)

IMAGE_SIZE = 100
DEFAULT_THRESHOLD = 128
IMAGE_SUFFIXES = (".pgm", ".pnm", ".png")


class ClassLabel(enum.Enum):
    ANIMAL = "Animal"
    PLANT = "Plant"

    def __str__(self):
        return self.value


class Polarity(enum.Enum):
    BRIGHT = "bright"
    DARK = "dark"


ANIMALS = (
    "beaver", "cugar_body", "crocodile", "dolphine", "elephant", "emu",
    "flamingo", "gerenuk", "hawksbill", "hedgehog", "leopards", "llama",
    "okapi", "pigeon", "platypus", "rhino", "rooster", "wild_cat",
)
PLANTS = (
    "bonsai", "joushua_tree", "lotus", "nautilus", "strawberry", "sunflower",
    "water_lilly",
)
SUBCATEGORIES = {name: ClassLabel.ANIMAL for name in ANIMALS}
SUBCATEGORIES.update({name: ClassLabel.PLANT for name in PLANTS})

# Caltech-101 directory spellings that differ from the names listed above.
ALIASES = {
    "cougar_body": "cugar_body",
    "dolphin": "dolphine",
    "joshua_tree": "joushua_tree",
    "water_lily": "water_lilly",
}


# ---------------------------------------------------------------------------
# image containers


@dataclass(frozen=True, eq=False)
class GrayscaleImage:
    pixels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"grayscale image needs a non-empty 2-D array, got {px.shape}")
        if px.size and (px.min() < 0 or px.max() > 255):
            raise ValueError("intensities must lie in 0..255")
        object.__setattr__(self, "pixels", px.astype(np.uint8, copy=False))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "GrayscaleImage":
        values = np.asarray(values)
        if values.size != width * height:
            raise ValueError(f"expected {width * height} values, got {values.size}")
        return cls(values.reshape(height, width))

    def __eq__(self, other):
        return isinstance(other, GrayscaleImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class BinaryImage:
    pixels: np.ndarray  # (height, width) uint8 of {0, 1}

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"binary image needs a non-empty 2-D array, got {px.shape}")
        if not np.isin(px, (0, 1)).all():
            raise ValueError("binary image values must be 0 or 1")
        object.__setattr__(self, "pixels", px.astype(np.uint8, copy=False))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_rows(cls, rows) -> "BinaryImage":
        """Build from strings such as ``["0110", "1111"]`` or nested lists."""
        return cls(np.array([[int(ch) for ch in row] for row in rows], dtype=np.uint8))

    def __eq__(self, other):
        return isinstance(other, BinaryImage) and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"BinaryImage({self.height}x{self.width}, on={int(self.pixels.sum())})"


@dataclass(frozen=True)
class LabeledSample:
    image: BinaryImage
    label: ClassLabel
    subcategory: str
    source_path: str


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    subcategory: str
    label: ClassLabel


@dataclass
class DatasetManifest:
    root: str
    samples: list[ManifestEntry]
    skipped: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    def labels(self) -> list[ClassLabel]:
        return [s.label for s in self.samples]


# ---------------------------------------------------------------------------
# decoding


def load_grayscale(path) -> GrayscaleImage:
    """Decode a PGM (P2/P5) or PNG (8-bit gray or RGB) file.

    The format is sniffed from the file's leading bytes, not its suffix.
    Colour PNGs are luma-converted with 0.299R + 0.587G + 0.114B, rounded
    half-up.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise ImageNotFound(f"no such image: {path}") from None
    except IsADirectoryError:
        raise ImageNotFound(f"not a file: {path}") from None

    if data.startswith(PNG_SIGNATURE):
        return decode_png(data)
    if data[:2] in (b"P2", b"P5"):
        return decode_pgm(data)
    if data[:1] == b"P" and data[1:2].isdigit():
        raise UnsupportedFormat(f"{path}: netpbm variant {data[:2].decode()} is not supported")
    raise UnsupportedFormat(f"{path}: not a PGM or PNG file")


def _pgm_tokens(data: bytes, count: int, pos: int):
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise CorruptImage("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos


def decode_pgm(data: bytes) -> GrayscaleImage:
    magic = data[:2]
    try:
        tokens, pos = _pgm_tokens(data, 3, 2)
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise CorruptImage("malformed PGM header") from None
    if width < 1 or height < 1:
        raise CorruptImage(f"invalid PGM dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise UnsupportedFormat(f"PGM maxval {maxval} outside 1..255")

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        raster = data[pos + 1 : pos + 1 + count]
        if len(raster) < count:
            raise CorruptImage(f"P5 raster truncated: {len(raster)} of {count} bytes")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    else:
        try:
            values = np.array([int(t) for t in data[pos:].split()[:count]], dtype=np.int64)
        except ValueError:
            raise CorruptImage("non-numeric sample in P2 raster") from None
        if values.size < count:
            raise CorruptImage(f"P2 raster truncated: {values.size} of {count} samples")
    if values.max(initial=0) > maxval:
        raise CorruptImage("PGM sample exceeds maxval")
    if maxval != 255:
        values = (values * 255 * 2 + maxval) // (2 * maxval)
    return GrayscaleImage(values.reshape(height, width).astype(np.uint8))


PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_PNG_CHANNELS = {0: 1, 2: 3}


def _png_chunks(data: bytes):
    pos = len(PNG_SIGNATURE)
    while pos < len(data):
        if pos + 8 > len(data):
            raise CorruptImage("truncated PNG chunk header")
        length, ctype = struct.unpack(">I4s", data[pos : pos + 8])
        body = data[pos + 8 : pos + 8 + length]
        crc = data[pos + 8 + length : pos + 12 + length]
        if len(body) < length or len(crc) < 4:
            raise CorruptImage(f"truncated PNG chunk {ctype!r}")
        if zlib.crc32(ctype + body) != struct.unpack(">I", crc)[0]:
            raise CorruptImage(f"CRC mismatch in PNG chunk {ctype!r}")
        yield ctype, body
        if ctype == b"IEND":
            return
        pos += 12 + length
    raise CorruptImage("PNG ended without IEND")


def _paeth(a, b, c):
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    return b if pb <= pc else c


def _unfilter(raw: bytes, height: int, stride: int, bpp: int) -> np.ndarray:
    out = np.zeros((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for r in range(height):
        start = r * (stride + 1)
        ftype = raw[start]
        line = np.frombuffer(raw, dtype=np.uint8, count=stride, offset=start + 1)
        if ftype == 0:
            cur = line.copy()
        elif ftype == 1:
            cur = (np.cumsum(line.reshape(-1, bpp), axis=0, dtype=np.uint64) % 256)
            cur = cur.astype(np.uint8).ravel()
        elif ftype == 2:
            cur = line + prev
        elif ftype in (3, 4):
            cur = bytearray(line.tobytes())
            up = prev.tolist()
            for i in range(stride):
                left = cur[i - bpp] if i >= bpp else 0
                if ftype == 3:
                    cur[i] = (cur[i] + ((left + up[i]) >> 1)) & 0xFF
                else:
                    upleft = up[i - bpp] if i >= bpp else 0
                    cur[i] = (cur[i] + _paeth(left, up[i], upleft)) & 0xFF
            cur = np.frombuffer(bytes(cur), dtype=np.uint8)
        else:
            raise CorruptImage(f"unknown PNG filter type {ftype}")
        out[r] = cur
        prev = out[r]
    return out


def decode_png(data: bytes) -> GrayscaleImage:
    header = None
    idat = []
    for ctype, body in _png_chunks(data):
        if ctype == b"IHDR":
            if len(body) != 13:
                raise CorruptImage("bad IHDR length")
            header = struct.unpack(">IIBBBBB", body)
        elif ctype == b"IDAT":
            idat.append(body)
    if header is None:
        raise CorruptImage("PNG without IHDR")
    width, height, depth, color, _comp, _filt, interlace = header
    if width < 1 or height < 1:
        raise CorruptImage(f"invalid PNG dimensions {width}x{height}")
    if depth != 8 or color not in _PNG_CHANNELS:
        raise UnsupportedFormat(f"PNG bit depth {depth} / colour type {color} not supported")
    if interlace != 0:
        raise UnsupportedFormat("interlaced PNG not supported")

    channels = _PNG_CHANNELS[color]
    stride = width * channels
    try:
        raw = zlib.decompress(b"".join(idat))
    except zlib.error as exc:
        raise CorruptImage(f"bad PNG image data: {exc}") from None
    if len(raw) < height * (stride + 1):
        raise CorruptImage("PNG image data truncated")

    rows = _unfilter(raw, height, stride, channels)
    if channels == 1:
        return GrayscaleImage(rows)
    rgb = rows.reshape(height, width, 3).astype(np.float64)
    luma = np.floor(0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2] + 0.5)
    return GrayscaleImage(np.clip(luma, 0, 255).astype(np.uint8))


def encode_pgm(img: Union[GrayscaleImage, BinaryImage], binary_scale: int = 255) -> bytes:
    """Serialize as binary P5; binary images are written as 0/``binary_scale``."""
    px = img.pixels
    if isinstance(img, BinaryImage):
        px = px * np.uint8(binary_scale)
    header = f"P5\n{px.shape[1]} {px.shape[0]}\n255\n".encode("ascii")
    return header + px.astype(np.uint8).tobytes()


# ---------------------------------------------------------------------------
# pixel operations


def binarize(img: GrayscaleImage, threshold: int = DEFAULT_THRESHOLD,
             foreground: Polarity = Polarity.BRIGHT) -> BinaryImage:
    px = img.pixels.astype(np.int16)
    if Polarity(foreground) is Polarity.BRIGHT:
        mask = px >= threshold
    else:
        mask = px < threshold
    return BinaryImage(mask.astype(np.uint8))


def rescale(img: BinaryImage, target_w: int = IMAGE_SIZE, target_h: int = IMAGE_SIZE) -> BinaryImage:
    """Nearest-neighbour resample sampling each output pixel's centre.

    Output ``(r, c)`` reads source ``(floor((r + .5) m / th), floor((c + .5) n / tw))``;
    the floor is taken in integer arithmetic so no rounding error creeps in.
    """
    if target_w < 1 or target_h < 1:
        raise ZeroDimension(f"target size {target_w}x{target_h} must be positive")
    m, n = img.height, img.width
    rows = ((2 * np.arange(target_h) + 1) * m) // (2 * target_h)
    cols = ((2 * np.arange(target_w) + 1) * n) // (2 * target_w)
    return BinaryImage(img.pixels[np.ix_(rows, cols)])


def load_binary(path, threshold: int = DEFAULT_THRESHOLD,
                foreground: Polarity = Polarity.BRIGHT, size: int = IMAGE_SIZE) -> BinaryImage:
    """Standard preprocessing: decode, threshold, resample to ``size`` x ``size``."""
    return rescale(binarize(load_grayscale(path), threshold, foreground), size, size)


# ---------------------------------------------------------------------------
# dataset catalogue


def canonical_subcategory(name: str):
    key = name.lower()
    key = ALIASES.get(key, key)
    return key if key in SUBCATEGORIES else None


def scan_dataset(root, overrides: Mapping[str, str] | None = None) -> DatasetManifest:
    """Catalogue ``root/<subcategory>/**/<image>`` files.

    ``overrides`` maps a subcategory name to ``"Animal"`` or ``"Plant"`` to
    change its class (e.g. moving nautilus to Animal).  Unrecognized
    directories are listed in ``manifest.skipped``.
    """
    root = Path(root)
    if not root.is_dir():
        raise ImageNotFound(f"dataset root {root} is not a directory")
    classes = dict(SUBCATEGORIES)
    for name, label in (overrides or {}).items():
        key = canonical_subcategory(name)
        if key is None:
            raise UnknownSubcategory(f"override for unknown subcategory {name!r}")
        classes[key] = ClassLabel(label)

    loose = sorted(p.name for p in root.iterdir()
                   if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if loose:
        raise AmbiguousLayout(f"image files directly in dataset root: {', '.join(loose[:5])}")

    samples, skipped = [], []
    for sub in sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith(".")):
        key = canonical_subcategory(sub.name)
        if key is None:
            skipped.append(sub.name)
            continue
        for f in sorted(sub.rglob("*")):
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES:
                samples.append(ManifestEntry(f.relative_to(root).as_posix(), key, classes[key]))
    if not samples:
        raise EmptyDataset(
            f"no images under recognized subcategories in {root}"
            + (f" (skipped: {', '.join(skipped)})" if skipped else ""),
            skipped,
        )
    return DatasetManifest(str(root), samples, skipped)


def write_manifest_csv(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "subcategory", "label"])
        for s in manifest.samples:
            writer.writerow([s.path, s.subcategory, s.label.value])


def load_samples(manifest: DatasetManifest, threshold: int = DEFAULT_THRESHOLD,
                 foreground: Polarity = Polarity.BRIGHT) -> list[LabeledSample]:
    root = Path(manifest.root)
    out = []
    for s in manifest.samples:
        try:
            img = load_binary(root / s.path, threshold, foreground)
        except (CorruptImage, UnsupportedFormat) as exc:
            raise type(exc)(f"{s.path}: {exc}") from None
        out.append(LabeledSample(img, s.label, s.subcategory, s.path))
    return out


# ---------------------------------------------------------------------------
# synthetic silhouettes


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    rx: float
    ry: float


@dataclass(frozen=True)
class Blob:
    seed: int
    roughness: float = 0.3


@dataclass(frozen=True)
class StickFigure:
    seed: int


ShapeSpec = Union[Ellipse, Blob, StickFigure]


def _grid(size):
    y, x = np.mgrid[0:size, 0:size]
    return x.astype(np.float64), y.astype(np.float64)


def _ellipse_mask(x, y, cx, cy, rx, ry):
    return ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0


def _rect_mask(x, y, x0, y0, x1, y1):
    return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)


def synth_silhouette(spec: ShapeSpec, size: int = IMAGE_SIZE) -> BinaryImage:
    """Render a deterministic test silhouette.

    Pixel ``(row y, column x)`` is treated as the point ``(x, y)``.  Blobs
    are star-shaped regions with a seeded Fourier-perturbed radius; stick
    figures are a body, a head and four legs with seeded proportions.
    """
    if size < 8:
        raise DegenerateSpec(f"size {size} below minimum of 8")
    x, y = _grid(size)

    if isinstance(spec, Ellipse):
        if spec.rx <= 0 or spec.ry <= 0:
            raise DegenerateSpec("ellipse radii must be positive")
        mask = _ellipse_mask(x, y, spec.cx, spec.cy, spec.rx, spec.ry)
    elif isinstance(spec, Blob):
        if spec.roughness < 0:
            raise DegenerateSpec("roughness must be non-negative")
        rng = np.random.default_rng(spec.seed)
        harmonics = np.arange(2, 8)
        amp = rng.normal(0.0, 1.0, harmonics.size) / harmonics
        phase = rng.uniform(0.0, 2 * math.pi, harmonics.size)
        c = (size - 1) / 2.0
        theta = np.arctan2(y - c, x - c)
        wobble = (amp[:, None, None] * np.cos(harmonics[:, None, None] * theta + phase[:, None, None])).sum(0)
        radius = 0.3 * size * np.clip(1.0 + spec.roughness * wobble, 0.2, 1.6)
        mask = np.hypot(x - c, y - c) <= radius
    elif isinstance(spec, StickFigure):
        mask = _stick_figure(spec.seed, size, x, y)
    else:
        raise TypeError(f"unknown shape spec {spec!r}")

    if not mask.any():
        # keep the at-least-one-pixel guarantee for tiny shapes off the grid
        mask[size // 2, size // 2] = True
    return BinaryImage(mask.astype(np.uint8))


def _stick_figure(seed, size, x, y):
    rng = np.random.default_rng(seed)
    s = size / 100.0
    body_cx = s * rng.uniform(42, 52)
    body_cy = s * rng.uniform(40, 50)
    body_rx = s * rng.uniform(20, 28)
    body_ry = s * rng.uniform(8, 13)
    mask = _ellipse_mask(x, y, body_cx, body_cy, body_rx, body_ry)

    head_r = s * rng.uniform(6, 10)
    head_cx = body_cx + body_rx + 0.6 * head_r
    head_cy = body_cy - body_ry - rng.uniform(0, 8) * s
    mask |= _ellipse_mask(x, y, head_cx, head_cy, head_r, head_r)
    # neck
    mask |= _rect_mask(x, y, head_cx - 0.5 * head_r - 2 * s, head_cy,
                       head_cx - 0.5 * head_r + 2 * s, body_cy)

    leg_w = s * rng.uniform(2.5, 4.5)
    leg_bottom = min(size - 1.0, body_cy + body_ry + s * rng.uniform(25, 38))
    for frac in (0.1, 0.3, 0.7, 0.9):
        lx = body_cx - body_rx + frac * 2 * body_rx + s * rng.uniform(-2, 2)
        mask |= _rect_mask(x, y, lx - leg_w / 2, body_cy, lx + leg_w / 2, leg_bottom)
    return mask
