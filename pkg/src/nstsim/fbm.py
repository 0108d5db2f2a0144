"""Exact fractional Brownian motion synthesis by Cholesky factorization.

Paths live on the integer grid t = 0..n-1 and fields on the unit-spaced
lattice {0..side-1}^2, both pinned to zero at the origin.  The process is
Gaussian with covariance

    sigma_h2/2 * (|t|^2H + |s|^2H - |t - s|^2H)

(Euclidean norms for fields), so sampling is ``L @ z`` with ``K = L L^T``
factored once per (H, sigma_w2, size) and cached.

Cost of a field factorization is O(side^6) time and O(side^4) memory: at
side=128 the covariance matrix holds 16383^2 doubles (~2.1 GB) and the
factorization takes tens of seconds on one core.  ``MAX_FIELD_SIDE`` bounds
this.
"""

from __future__ import annotations

import math
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import lapack

from .core import GrayImage, make_rng

MAX_FIELD_SIDE = 128
_CHUNK_ROWS = 1024


class CholeskyError(np.linalg.LinAlgError):
    """Covariance matrix is not numerically positive definite."""

    def __init__(self, pivot: int, size: int):
        self.pivot = pivot
        super().__init__(f"Cholesky factorization failed at pivot {pivot} of {size}")


@dataclass(frozen=True)
class FbmParams:
    hurst: float
    sigma_w2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"Hurst parameter must lie in (0, 1), got {self.hurst}")
        if not self.sigma_w2 > 0.0:
            raise ValueError(f"sigma_w2 must be positive, got {self.sigma_w2}")


@dataclass(frozen=True, eq=False)
class FbmPath:
    params: FbmParams
    samples: np.ndarray


@dataclass(frozen=True, eq=False)
class FbmField:
    params: FbmParams
    grid: GrayImage


def sigma_h2(params: FbmParams) -> float:
    """Variance scale of B_H at unit distance.

    ``sigma_w2/2 * cos(pi H) * Gamma(1 - 2H) / (pi H)``, rewritten with
    d = 1/2 - H as ``sin(pi d) * Gamma(2d)`` so the removable singularity at
    H = 1/2 is evaluated accurately; at d = 0 the limit sigma_w2/2 is returned.
    """
    h = params.hurst
    d = 0.5 - h
    if d == 0.0:
        return params.sigma_w2 / 2.0
    # Gamma(2d) has a pole at 0; near it use the product with sin directly
    if abs(d) < 1e-6:
        # sin(pi d) Gamma(2d) = (pi/2) * (1 - 2 d gamma_e + O(d^2))
        ratio = (math.pi / 2.0) * (1.0 - 2.0 * d * 0.5772156649015329)
    else:
        ratio = math.sin(math.pi * d) * math.gamma(2.0 * d)
    return params.sigma_w2 / 2.0 * ratio / (math.pi * h)


def fbm_covariance(t, s, params: FbmParams):
    """E[B_H(t) B_H(s)]; broadcasts over array arguments."""
    two_h = 2.0 * params.hurst
    t = np.abs(np.asarray(t, dtype=np.float64))
    s = np.abs(np.asarray(s, dtype=np.float64))
    diff = np.abs(t - s)
    cov = 0.5 * sigma_h2(params) * (t**two_h + s**two_h - diff**two_h)
    return float(cov) if cov.ndim == 0 else cov


def field_covariance(x, y, params: FbmParams):
    """E[B_H(X) B_H(Y)] for 2D points (last axis holds the coordinates)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    two_h = 2.0 * params.hurst
    nx = np.hypot(x[..., 0], x[..., 1])
    ny = np.hypot(y[..., 0], y[..., 1])
    nd = np.hypot(x[..., 0] - y[..., 0], x[..., 1] - y[..., 1])
    cov = 0.5 * sigma_h2(params) * (nx**two_h + ny**two_h - nd**two_h)
    return float(cov) if cov.ndim == 0 else cov


# --- factor cache -----------------------------------------------------------

def _cache_budget() -> int:
    mb = os.environ.get("NSTSIM_FACTOR_CACHE_MB")
    return int(mb) * 2**20 if mb else 2600 * 2**20


class _FactorCache:
    """LRU cache of Cholesky factors bounded by total bytes."""

    def __init__(self):
        self._items: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            if key in self._items:
                self._items.move_to_end(key)
                return self._items[key]
        return None

    def make_room(self, nbytes: int):
        budget = _cache_budget()
        with self._lock:
            while self._items and self._bytes() + nbytes > budget:
                self._items.popitem(last=False)

    def put(self, key, value):
        with self._lock:
            self._items[key] = value
        self.make_room(0)
        with self._lock:
            # always keep the newest entry, even when it alone exceeds the budget
            if key not in self._items:
                self._items[key] = value

    def clear(self):
        with self._lock:
            self._items.clear()

    def _bytes(self) -> int:
        return sum(v.nbytes for v in self._items.values())


_FACTORS = _FactorCache()


def clear_factor_cache() -> None:
    _FACTORS.clear()


def _factorize(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, overwriting ``cov``."""
    # cov is symmetric, so its C-ordered buffer is also a valid Fortran array
    factor, info = lapack.dpotrf(cov.T, lower=1, clean=1, overwrite_a=1)
    if info > 0:
        raise CholeskyError(int(info) - 1, cov.shape[0])
    if info < 0:
        raise ValueError(f"dpotrf argument {-info} invalid")
    return factor


def _path_factor(params: FbmParams, n: int) -> np.ndarray:
    key = ("path", params.hurst, params.sigma_w2, n)
    factor = _FACTORS.get(key)
    if factor is None:
        t = np.arange(1, n, dtype=np.float64)
        cov = fbm_covariance(t[:, None], t[None, :], params)
        factor = _factorize(np.ascontiguousarray(cov))
        _FACTORS.put(key, factor)
    return factor


def _lattice(side: int) -> np.ndarray:
    """Lattice points (x, y) in row-major order with the origin removed."""
    yy, xx = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1).astype(np.float64)
    return pts[1:]


def _field_factor(params: FbmParams, side: int) -> np.ndarray:
    key = ("field", params.hurst, params.sigma_w2, side)
    factor = _FACTORS.get(key)
    if factor is not None:
        return factor
    pts = _lattice(side)
    m = len(pts)
    _FACTORS.make_room(8 * m * m)
    two_h = 2.0 * params.hurst
    half_var = 0.5 * sigma_h2(params)
    radial = np.hypot(pts[:, 0], pts[:, 1]) ** two_h
    cov = np.empty((m, m), dtype=np.float64)
    for start in range(0, m, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, m)
        block = cov[start:stop]
        np.hypot(pts[start:stop, None, 0] - pts[None, :, 0],
                 pts[start:stop, None, 1] - pts[None, :, 1], out=block)
        np.power(block, two_h, out=block)
        np.subtract(radial[start:stop, None] + radial[None, :], block, out=block)
        block *= half_var
    factor = _factorize(cov)
    _FACTORS.put(key, factor)
    return factor


# --- synthesis --------------------------------------------------------------

def synth_path(params: FbmParams, n: int, seed: int) -> FbmPath:
    """One fBm path B_H(0..n-1) with B_H(0) = 0."""
    if n < 2:
        raise ValueError("path length must be >= 2")
    factor = _path_factor(params, n)
    z = make_rng(seed).standard_normal(n - 1)
    samples = np.zeros(n)
    samples[1:] = factor @ z
    samples.flags.writeable = False
    return FbmPath(params, samples)


def synth_field(params: FbmParams, side: int, seed: int) -> FbmField:
    """Lévy fractional Brownian field on a side x side unit lattice.

    Pixel (row y, column x) holds B_H at the point (x, y); pixel (0, 0) is 0.
    """
    if side < 2:
        raise ValueError("field side must be >= 2")
    if side > MAX_FIELD_SIDE:
        raise ValueError(f"dimension too large: exact synthesis supports side <= {MAX_FIELD_SIDE}")
    factor = _field_factor(params, side)
    z = make_rng(seed).standard_normal(side * side - 1)
    values = np.zeros(side * side)
    values[1:] = factor @ z
    return FbmField(params, GrayImage(values.reshape(side, side)))


def field_to_unit(field: FbmField) -> GrayImage:
    """Affinely map a field to [0, 1], as an 8-bit texture file would store it."""
    data = field.grid.data
    lo, hi = data.min(), data.max()
    return GrayImage((data - lo) / (hi - lo))


def rescale_check(paths: Sequence[FbmPath], alpha: float) -> tuple[float, float]:
    """Second-moment form of B_H(alpha t) = alpha^H B_H(t) over an ensemble.

    Returns (mean_t Var[B(alpha t)], alpha^2H * mean_t Var[B(t)]) over grid
    points t >= 1 for which alpha*t is also a grid point.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    samples = np.stack([p.samples for p in paths])
    hurst = paths[0].params.hurst
    n = samples.shape[1]
    ts, scaled = [], []
    for t in range(1, n):
        at = alpha * t
        k = round(at)
        if abs(at - k) < 1e-9 and 1 <= k <= n - 1:
            ts.append(t)
            scaled.append(k)
    if not ts:
        raise ValueError("no grid point t has alpha*t on the grid")
    var = samples.var(axis=0, ddof=1)
    lhs = float(np.mean(var[scaled]))
    rhs = float(alpha ** (2.0 * hurst) * np.mean(var[ts]))
    return lhs, rhs
