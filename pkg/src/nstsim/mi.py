"""Plug-in entropy / mutual information, scale-wise and patch-wise.

All information quantities are in bits.  Real-valued inputs are quantized
per pair: both members are binned over their joint [min, max] range, which
makes every value invariant to adding a constant to the image.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.ndimage import correlate1d

from ._backend import kernels
from .core import GrayImage, QuantizedImage, quantize_array

BINOMIAL_5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
HIST_BINS_DISPLAY = 20


@dataclass(frozen=True)
class HistogramSpec:
    bins: int = 256

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError("bins must be >= 2")


class MiResult(NamedTuple):
    mi: float
    hx: float
    hy: float
    hxy: float


def _entropy_counts(counts: np.ndarray) -> float:
    c = counts[counts > 0].astype(np.float64)
    n = c.sum()
    p = c / n
    return float(-np.sum(p * np.log2(p)))


def entropy(codes) -> float:
    """Shannon entropy (bits) of the empirical code distribution."""
    if isinstance(codes, QuantizedImage):
        codes = codes.data
    codes = np.asarray(codes).ravel()
    if codes.size == 0:
        raise ValueError("entropy of an empty sequence")
    return _entropy_counts(np.bincount(codes))


def mutual_information(x, y) -> MiResult:
    """Plug-in MI = H(X) + H(Y) - H(X,Y), all from one joint histogram."""
    x = np.asarray(x).ravel()
    y = np.asarray(y).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size == 0:
        raise ValueError("mutual information of empty sequences")
    nx, ny = int(x.max()) + 1, int(y.max()) + 1
    joint = np.bincount(x * ny + y, minlength=nx * ny).reshape(nx, ny)
    hx = _entropy_counts(joint.sum(axis=1))
    hy = _entropy_counts(joint.sum(axis=0))
    hxy = _entropy_counts(joint.ravel())
    return MiResult(max(hx + hy - hxy, 0.0), hx, hy, hxy)


def joint_quantize(a, b, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Quantize two arrays with one shared range (their joint min/max)."""
    lo = min(float(np.min(a)), float(np.min(b)))
    hi = max(float(np.max(a)), float(np.max(b)))
    return quantize_array(a, bins, lo, hi), quantize_array(b, bins, lo, hi)


# --- pyramid ----------------------------------------------------------------

@dataclass(frozen=True)
class Pyramid:
    """levels[0] is the input, each next level is half the size."""

    levels: tuple

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, i) -> GrayImage:
        return self.levels[i]


def binomial_blur(img: GrayImage) -> GrayImage:
    """Separable (1,4,6,4,1)/16 filter with replicated borders."""
    u = correlate1d(img.data, BINOMIAL_5, axis=0, mode="nearest")
    u = correlate1d(u, BINOMIAL_5, axis=1, mode="nearest")
    return GrayImage(u)


def reduce(img: GrayImage) -> GrayImage:
    h2, w2 = img.height // 2, img.width // 2
    if h2 < 1 or w2 < 1:
        raise ValueError("image too small to reduce")
    return GrayImage(binomial_blur(img).data[0:2 * h2:2, 0:2 * w2:2])


def build_pyramid(img: GrayImage, levels: int) -> Pyramid:
    if levels < 2:
        raise ValueError("a pyramid needs at least 2 levels")
    if min(img.shape) >> (levels - 1) < 2:
        raise ValueError(f"too many levels ({levels}) for a {img.width}x{img.height} image")
    out = [img]
    for _ in range(levels - 1):
        out.append(reduce(out[-1]))
    return Pyramid(tuple(out))


def upsample_nearest(coarse: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Pixel replication to ``shape``; odd trailing rows/columns copy the edge."""
    up = np.repeat(np.repeat(coarse, 2, axis=0), 2, axis=1)
    h, w = shape
    pad_h, pad_w = max(0, h - up.shape[0]), max(0, w - up.shape[1])
    if pad_h or pad_w:
        up = np.pad(up, ((0, pad_h), (0, pad_w)), mode="edge")
    return up[:h, :w]


# --- scale-wise MI ----------------------------------------------------------

@dataclass(frozen=True)
class ScalePair:
    """MI between pyramid image ``n`` and the next coarser image ``n - 1``.

    Larger ``n`` is finer.  A pyramid of L + 1 images is numbered I_L (the
    input) down to I_0, giving the pairs n = L .. 1.
    """

    n: int
    fine_shape: tuple[int, int]
    coarse_shape: tuple[int, int]
    mi: float
    h_fine: float
    h_cond: float
    h_coarse: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "fine_shape": list(self.fine_shape),
            "coarse_shape": list(self.coarse_shape),
            "mi": self.mi,
            "h_fine": self.h_fine,
            "h_fine_given_coarse": self.h_cond,
            "h_coarse": self.h_coarse,
        }


@dataclass(frozen=True)
class MiScaleReport:
    pairs: tuple
    bins: int

    def values(self) -> dict:
        return {p.n: p.mi for p in self.pairs}

    def as_dict(self) -> dict:
        return {"bins": self.bins, "pairs": [p.as_dict() for p in self.pairs]}


def scale_pair_mi(fine: GrayImage, coarse: GrayImage, bins: int, n: int = 1) -> ScalePair:
    """MI(fine, coarse) after nearest-neighbour upsampling of ``coarse``.

    ``mi`` is H(fine) - H(fine | coarse) from one joint histogram.
    """
    up = upsample_nearest(coarse.data, fine.shape)
    qf, qc = joint_quantize(fine.data, up, bins)
    res = mutual_information(qf, qc)
    h_cond = res.hxy - res.hy
    mi = max(res.hx - h_cond, 0.0)
    return ScalePair(n, fine.shape, coarse.shape, mi, res.hx, h_cond, res.hy)


def mi_scales_pyramid(pyramid: Pyramid, spec: HistogramSpec | None = None) -> MiScaleReport:
    """One ScalePair per consecutive pair, finest first (n = len - 1 .. 1)."""
    spec = spec or HistogramSpec()
    top = len(pyramid) - 1
    pairs = tuple(
        scale_pair_mi(pyramid[i], pyramid[i + 1], spec.bins, n=top - i)
        for i in range(top)
    )
    return MiScaleReport(pairs, spec.bins)


def mi_scales(img: GrayImage, levels: int = 4, spec: HistogramSpec | None = None) -> MiScaleReport:
    """Scale-wise MI(I_n, I_n-1) for n = levels .. 1.

    The input is I_levels and ``levels`` successive reductions give
    I_levels-1 .. I_0, so a 4-level analysis reports four pairs.  The
    coarser image of each pair is upsampled by pixel replication and both
    are quantized over their joint range.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    return mi_scales_pyramid(build_pyramid(img, levels + 1), spec)


# --- patch-wise MI ----------------------------------------------------------

def tile_patches(u: np.ndarray, patch: int) -> np.ndarray:
    """Non-overlapping patch x patch tiles in row-major order, as (k, patch*patch)."""
    rows, cols = u.shape[0] // patch, u.shape[1] // patch
    if rows == 0 or cols == 0:
        raise ValueError(f"patch {patch} larger than level {u.shape[1]}x{u.shape[0]}")
    t = u[:rows * patch, :cols * patch].reshape(rows, patch, cols, patch)
    return t.transpose(0, 2, 1, 3).reshape(rows * cols, patch * patch)


@dataclass(frozen=True, eq=False)
class PatchLevel:
    """Normalized MI(P_i, P_j) / H(P_i) for every ordered patch pair.

    ``n`` counts pyramid levels from 1 at the input resolution.
    """

    n: int
    shape: tuple[int, int]
    normalized: np.ndarray
    mi: np.ndarray
    h_first: np.ndarray
    hist_counts: np.ndarray
    hist_edges: np.ndarray

    def off_diagonal(self) -> np.ndarray:
        k = self.normalized.shape[0]
        vals = self.normalized[~np.eye(k, dtype=bool)]
        return vals[np.isfinite(vals)]

    def summary(self) -> dict:
        vals = self.off_diagonal()
        if vals.size == 0:
            return {"n": self.n, "shape": list(self.shape), "patches": int(self.normalized.shape[0]),
                    "median": None, "iqr": None, "max": None}
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        return {
            "n": self.n,
            "shape": list(self.shape),
            "patches": int(self.normalized.shape[0]),
            "median": float(med),
            "iqr": float(q3 - q1),
            "max": float(vals.max()),
        }


@dataclass(frozen=True)
class MiPatchReport:
    patch: int
    bins: int
    levels: tuple = field(default_factory=tuple)

    def medians(self) -> list:
        return [lvl.summary()["median"] for lvl in self.levels]

    def as_dict(self) -> dict:
        return {"patch": self.patch, "bins": self.bins, "levels": [lvl.summary() for lvl in self.levels]}


def patch_mi_matrix(u: np.ndarray, patch: int, bins: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(normalized, mi, h_first) matrices over the tiles of ``u``."""
    tiles = tile_patches(u, patch)
    mi, h_first = kernels.patch_mi(tiles, bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = np.where(h_first > 0, mi / h_first, np.nan)
    return normalized, mi, h_first


def mi_patches(img: GrayImage, patch: int = 32, levels: int = 3,
               spec: HistogramSpec | None = None) -> MiPatchReport:
    """Patch-wise normalized MI on each of ``levels`` pyramid levels.

    Pixels of two patches are paired by identical within-patch position.  The
    display histogram clamps values above 1 into the last bin; stored
    matrices are never clamped.
    """
    spec = spec or HistogramSpec()
    if patch < 8:
        raise ValueError("patch must be >= 8")
    pyramid = [img] if levels == 1 else list(build_pyramid(img, levels).levels)
    for lvl in pyramid:
        if min(lvl.shape) < patch:
            raise ValueError(f"patch {patch} larger than level {lvl.width}x{lvl.height}")
    out = []
    edges = np.linspace(0.0, 1.0, HIST_BINS_DISPLAY + 1)
    for idx, lvl in enumerate(pyramid):
        normalized, mi, h_first = patch_mi_matrix(lvl.data, patch, spec.bins)
        k = normalized.shape[0]
        off = normalized[~np.eye(k, dtype=bool)]
        off = np.clip(off[np.isfinite(off)], 0.0, 1.0)
        counts, _ = np.histogram(off, bins=edges)
        out.append(PatchLevel(idx + 1, lvl.shape, normalized, mi, h_first, counts, edges))
    return MiPatchReport(patch, spec.bins, tuple(out))
