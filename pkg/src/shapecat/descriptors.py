"""Projection and profile shape descriptors.

Six axis-aligned descriptors are computed from a binary silhouette:

* ``h`` / ``v`` -- foreground count per row / per column.
* ``l`` / ``r`` -- per row, background run before the first (after the
  last) foreground pixel.
* ``t`` / ``b`` -- the same per column, from the top / bottom edge.

An empty line has profile value equal to the full dimension.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .dataset_io import IMAGE_SIZE, BinaryImage
from .errors import DimensionMismatch, EmptyVector, MixedNormalization, OutOfRange, WrongDimensions


class Atom(enum.Enum):
    H = "h"
    V = "v"
    L = "l"
    R = "r"
    T = "t"
    B = "b"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Concat:
    parts: tuple[Atom, ...]

    def __post_init__(self):
        parts = tuple(Atom(p) for p in self.parts)
        if not parts:
            raise ValueError("Concat needs at least one part")
        object.__setattr__(self, "parts", parts)

    def __str__(self):
        return "[" + ",".join(p.value for p in self.parts) + "]"


DescriptorKind = Union[Atom, Concat]
ALL_ATOMS = tuple(Atom)
HVTB = Concat((Atom.H, Atom.V, Atom.T, Atom.B))


def parse_kind(text: str) -> DescriptorKind:
    """``"v"`` -> ``Atom.V``; ``"[h,v,t,b]"`` -> ``Concat``."""
    text = text.strip().lower()
    if text.startswith("[") and text.endswith("]"):
        return Concat(tuple(Atom(p.strip()) for p in text[1:-1].split(",")))
    return Atom(text)


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    TOP = "top"
    BOTTOM = "bottom"


_SIDE_ATOM = {Side.LEFT: Atom.L, Side.RIGHT: Atom.R, Side.TOP: Atom.T, Side.BOTTOM: Atom.B}


@dataclass(frozen=True, eq=False)
class FeatureVector:
    kind: DescriptorKind
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("feature values must be one-dimensional")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return (isinstance(other, FeatureVector) and self.kind == other.kind
                and self.normalized == other.normalized
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    skewness: float
    kurtosis: float


def horizontal_projection(img: BinaryImage) -> FeatureVector:
    return FeatureVector(Atom.H, img.pixels.sum(axis=1, dtype=np.int64))


def vertical_projection(img: BinaryImage) -> FeatureVector:
    return FeatureVector(Atom.V, img.pixels.sum(axis=0, dtype=np.int64))


def _leading_zeros(px: np.ndarray) -> np.ndarray:
    """Zeros before the first 1 along axis 1; full length when the row is empty."""
    has = px.any(axis=1)
    first = np.argmax(px, axis=1)
    return np.where(has, first, px.shape[1])


def profile(img: BinaryImage, side: Side) -> FeatureVector:
    side = Side(side)
    px = img.pixels
    if side is Side.LEFT:
        out = _leading_zeros(px)
    elif side is Side.RIGHT:
        out = _leading_zeros(px[:, ::-1])
    elif side is Side.TOP:
        out = _leading_zeros(px.T)
    else:
        out = _leading_zeros(px[::-1, :].T)
    return FeatureVector(_SIDE_ATOM[side], out)


def normalize(vec: FeatureVector, scale: float = IMAGE_SIZE) -> FeatureVector:
    if scale <= 0:
        raise ValueError("scale must be positive")
    v = vec.values
    if v.size and (v.min() < 0 or v.max() > scale):
        raise OutOfRange(f"values outside [0, {scale}]")
    return FeatureVector(vec.kind, v / scale, normalized=True)


def moments(vec) -> MomentSummary:
    """Population mean, variance, skewness m3/m2^1.5 and kurtosis m4/m2^2.

    Skewness and kurtosis are reported as 0 for constant input.
    """
    x = np.asarray(vec.values if isinstance(vec, FeatureVector) else vec, dtype=np.float64)
    if x.size == 0:
        raise EmptyVector("moments of an empty vector")
    if (x == x[0]).all():
        return MomentSummary(float(x[0]), 0.0, 0.0, 0.0)
    mean = x.mean()
    d = x - mean
    m2 = np.mean(d * d)
    m3 = np.mean(d ** 3)
    m4 = np.mean(d ** 4)
    return MomentSummary(float(mean), float(m2), float(m3 / m2 ** 1.5), float(m4 / m2 ** 2))


def concat(parts: Sequence[FeatureVector]) -> FeatureVector:
    if not parts:
        raise ValueError("nothing to concatenate")
    flags = {p.normalized for p in parts}
    if len(flags) > 1:
        raise MixedNormalization("cannot concatenate normalized and raw vectors")
    atoms = []
    for p in parts:
        atoms.extend(p.kind.parts if isinstance(p.kind, Concat) else (p.kind,))
    return FeatureVector(Concat(tuple(atoms)), np.concatenate([p.values for p in parts]),
                         normalized=flags.pop())


_ATOM_FN = {
    Atom.H: horizontal_projection,
    Atom.V: vertical_projection,
    Atom.L: lambda img: profile(img, Side.LEFT),
    Atom.R: lambda img: profile(img, Side.RIGHT),
    Atom.T: lambda img: profile(img, Side.TOP),
    Atom.B: lambda img: profile(img, Side.BOTTOM),
}


def atomic(img: BinaryImage, atom: Atom) -> FeatureVector:
    """Unnormalized descriptor of one atomic kind."""
    return _ATOM_FN[Atom(atom)](img)


def extract(img: BinaryImage, kind: DescriptorKind) -> FeatureVector:
    if img.pixels.shape != (IMAGE_SIZE, IMAGE_SIZE):
        raise WrongDimensions(f"expected {IMAGE_SIZE}x{IMAGE_SIZE}, got {img.height}x{img.width}")
    if isinstance(kind, Concat):
        return concat([normalize(atomic(img, a), IMAGE_SIZE) for a in kind.parts])
    return normalize(atomic(img, kind), IMAGE_SIZE)


def extract_all(images: Iterable[BinaryImage]) -> dict[Atom, np.ndarray]:
    """Normalized matrices (samples x 100) for all six atomic kinds."""
    images = list(images)
    return {a: np.stack([extract(img, a).values for img in images]) for a in ALL_ATOMS}


def as_matrix(features) -> np.ndarray:
    """Stack FeatureVectors (or pass through an array) into a 2-D float array."""
    if isinstance(features, np.ndarray):
        return np.atleast_2d(features.astype(np.float64, copy=False))
    rows = [f.values if isinstance(f, FeatureVector) else np.asarray(f, dtype=np.float64)
            for f in features]
    if not rows:
        return np.zeros((0, 0))
    if len({r.size for r in rows}) > 1:
        raise DimensionMismatch("feature vectors differ in length")
    return np.stack(rows).astype(np.float64, copy=False)
