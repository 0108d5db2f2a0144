"""Gray-level co-occurrence matrices and their mutual-information term."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .core import GrayImage, QuantizedImage, quantize


@dataclass(frozen=True)
class GlcmOffset:
    """Pairs pixel (x, y) with (x + dx, y + dy); x is the column."""

    dx: int
    dy: int

    def __post_init__(self):
        if self.dx == 0 and self.dy == 0:
            raise ValueError("offset (0, 0) is not allowed")


@dataclass(frozen=True, eq=False)
class Glcm:
    levels: int
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def probabilities(self) -> np.ndarray:
        total = self.total
        if total == 0:
            return np.zeros_like(self.counts, dtype=np.float64)
        return self.counts / total


def glcm(q: QuantizedImage, offset: GlcmOffset) -> Glcm:
    """Directed (non-symmetrized) co-occurrence counts C(i, j)."""
    if abs(offset.dx) >= q.width or abs(offset.dy) >= q.height:
        raise ValueError(f"offset ({offset.dx}, {offset.dy}) does not fit a {q.width}x{q.height} image")
    counts = kernels.glcm_counts(q.data, q.levels, offset.dx, offset.dy)
    return Glcm(q.levels, counts)


def glcm_mi(g: Glcm) -> float:
    """sum P(i,j) log2(P(i,j) / (P_i(i) P_j(j))) in bits.

    Terms are computed from integer counts and summed in sorted order, so a
    transposed matrix (negated offset) gives a bit-identical result.
    """
    counts = g.counts.astype(np.int64)
    total = int(counts.sum())
    if total == 0:
        raise ValueError("empty GLCM")
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    i, j = np.nonzero(counts)
    c = counts[i, j]
    ratio = (c * total).astype(np.float64) / (rows[i] * cols[j]).astype(np.float64)
    terms = np.sort(c / total * np.log2(ratio))
    return max(float(np.sum(terms)), 0.0)


def horizontal_offsets(d_max: int) -> list:
    return [GlcmOffset(d, 0) for d in range(1, d_max + 1)]


def diagonal_offsets(d_max: int) -> list:
    return [GlcmOffset(d, d) for d in range(1, d_max + 1)]


@dataclass(frozen=True)
class GlcmProfile:
    levels: int
    entries: tuple

    def values(self) -> list:
        return [mi for _, _, mi in self.entries]

    def as_dict(self) -> dict:
        return {
            "levels": self.levels,
            "entries": [{"dx": dx, "dy": dy, "mi": mi} for dx, dy, mi in self.entries],
        }


def glcm_mi_profile(img: GrayImage, levels: int = 32, offsets=None) -> GlcmProfile:
    """Quantize once over the image's [min, max], then GLCM-MI per offset."""
    q = quantize(img, levels)
    offsets = horizontal_offsets(30) if offsets is None else offsets
    entries = tuple((o.dx, o.dy, glcm_mi(glcm(q, o))) for o in offsets)
    return GlcmProfile(levels, entries)
