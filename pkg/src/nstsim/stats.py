"""Distributional checks on texture layers.

Level-1 Haar detail coefficients, kurtosis, Kolmogorov-Smirnov tests for
Gaussianity and for uniform Fourier phase, and phase randomization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .core import DegenerateInputError, GrayImage, make_rng
from .diffusion import DiffusionSettings, separate

# Lilliefors (1967) critical values for the KS statistic with estimated mean
# and variance.  Columns: alpha = 0.20, 0.15, 0.10, 0.05, 0.01.
_LILLIEFORS_ALPHAS = (0.20, 0.15, 0.10, 0.05, 0.01)
_LILLIEFORS_TABLE = {
    4: (0.300, 0.319, 0.352, 0.381, 0.417),
    5: (0.285, 0.299, 0.315, 0.337, 0.405),
    6: (0.265, 0.277, 0.294, 0.319, 0.364),
    7: (0.247, 0.258, 0.276, 0.300, 0.348),
    8: (0.233, 0.244, 0.261, 0.285, 0.331),
    9: (0.223, 0.233, 0.249, 0.271, 0.311),
    10: (0.215, 0.224, 0.239, 0.258, 0.294),
    11: (0.206, 0.217, 0.230, 0.249, 0.284),
    12: (0.199, 0.212, 0.223, 0.242, 0.275),
    13: (0.190, 0.202, 0.214, 0.234, 0.268),
    14: (0.183, 0.194, 0.207, 0.227, 0.261),
    15: (0.177, 0.187, 0.201, 0.220, 0.257),
    16: (0.173, 0.182, 0.195, 0.213, 0.250),
    17: (0.169, 0.177, 0.189, 0.206, 0.245),
    18: (0.166, 0.173, 0.184, 0.200, 0.239),
    19: (0.163, 0.169, 0.179, 0.195, 0.235),
    20: (0.160, 0.166, 0.174, 0.190, 0.231),
    25: (0.142, 0.147, 0.158, 0.173, 0.200),
    30: (0.131, 0.136, 0.144, 0.161, 0.187),
}
_LILLIEFORS_LARGE = (0.736, 0.768, 0.805, 0.886, 1.031)


@dataclass(frozen=True, eq=False)
class WaveletDetail:
    """Level-1 orthonormal Haar detail subbands."""

    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.lh.ravel(), self.hl.ravel(), self.hh.ravel()])


@dataclass(frozen=True)
class KsOutcome:
    statistic: float
    critical: float
    alpha: float
    accepted: bool
    n: int

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "critical": self.critical,
            "alpha": self.alpha,
            "accepted": self.accepted,
            "n": self.n,
        }


@dataclass(frozen=True, eq=False)
class PhaseSpectrum:
    phases: np.ndarray
    magnitudes: np.ndarray


# --- Haar -------------------------------------------------------------------

def _blocks(img: GrayImage):
    if img.width < 2 or img.height < 2:
        raise ValueError("Haar transform needs at least a 2x2 image")
    h2, w2 = img.height // 2 * 2, img.width // 2 * 2
    u = img.data[:h2, :w2]
    return u[0::2, 0::2], u[0::2, 1::2], u[1::2, 0::2], u[1::2, 1::2]


def haar_level1(img: GrayImage) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(LL, LH, HL, HH) of a one-level orthonormal 2D Haar transform.

    Odd trailing rows/columns are dropped.  For a block [[a, b], [c, d]]:
    LH = (a+b-c-d)/2 (vertical detail), HL = (a-b+c-d)/2, HH = (a-b-c+d)/2.
    """
    a, b, c, d = _blocks(img)
    ll = (a + b + c + d) / 2
    lh = (a + b - c - d) / 2
    hl = (a - b + c - d) / 2
    hh = (a - b - c + d) / 2
    return ll, lh, hl, hh


def haar_detail(img: GrayImage) -> WaveletDetail:
    _, lh, hl, hh = haar_level1(img)
    return WaveletDetail(lh, hl, hh)


# --- moments ----------------------------------------------------------------

def kurtosis(x) -> float:
    """Plain kurtosis m4 / m2^2 from central sample moments (Gaussian = 3)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < 4:
        raise ValueError("kurtosis needs at least 4 samples")
    dev = x - x.mean()
    m2 = np.mean(dev**2)
    if not m2 > 0:
        raise DegenerateInputError("zero variance")
    return float(np.mean(dev**4) / m2**2)


def excess_kurtosis(x) -> float:
    return kurtosis(x) - 3.0


# --- KS ---------------------------------------------------------------------

def ks_distance(sorted_x: np.ndarray, cdf) -> float:
    """sup |F_n(x) - F(x)| for ascending samples and a vectorized CDF."""
    n = len(sorted_x)
    f = cdf(sorted_x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_critical(n: int, alpha: float) -> float:
    """Asymptotic two-sided critical value c(alpha)/sqrt(n)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def lilliefors_critical(n: int, alpha: float) -> float:
    """Tabulated critical value for the estimated-parameter normal KS test."""
    try:
        col = _LILLIEFORS_ALPHAS.index(alpha)
    except ValueError:
        raise ValueError(f"Lilliefors table has no alpha={alpha}; choose from {_LILLIEFORS_ALPHAS}") from None
    if n < 4:
        raise ValueError("Lilliefors table starts at n=4")
    if n > 30:
        return _LILLIEFORS_LARGE[col] / math.sqrt(n)
    # next tabulated size at or below n, the conservative side
    key = max(k for k in _LILLIEFORS_TABLE if k <= n)
    return _LILLIEFORS_TABLE[key][col]


def ks_test_gaussian(x, alpha: float = 0.05, lilliefors: bool = False) -> KsOutcome:
    """KS test of N(mean, std) after standardizing by the sample moments."""
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    if n < 8:
        raise ValueError("Gaussianity test needs at least 8 samples")
    std = x.std(ddof=1)
    if not std > 0:
        raise DegenerateInputError("zero variance")
    z = np.sort((x - x.mean()) / std)
    d = ks_distance(z, ndtr)
    crit = lilliefors_critical(n, alpha) if lilliefors else ks_critical(n, alpha)
    return KsOutcome(d, crit, alpha, d < crit, n)


def _uniform_phase_cdf(phi):
    return np.clip((phi + np.pi) / (2 * np.pi), 0.0, 1.0)


def ks_test_uniform(phases, alpha: float = 0.05) -> KsOutcome:
    """KS test against Uniform[-pi, pi] with the exact null CDF."""
    phases = np.sort(np.asarray(phases, dtype=np.float64).ravel())
    n = phases.size
    if n == 0:
        raise ValueError("no phases to test")
    d = ks_distance(phases, _uniform_phase_cdf)
    crit = ks_critical(n, alpha)
    return KsOutcome(d, crit, alpha, d < crit, n)


# --- Fourier phase ----------------------------------------------------------

def phase_spectrum(img: GrayImage) -> PhaseSpectrum:
    spec = np.fft.fft2(img.data)
    return PhaseSpectrum(np.angle(spec), np.abs(spec))


def _conjugate_masks(shape):
    """(representative, self-conjugate) boolean masks over the FFT grid.

    Each conjugate pair {k, -k} is represented by its lower flat index; the
    self-conjugate bins (DC and Nyquist rows/columns) pair with themselves.
    """
    h, w = shape
    ky, kx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    flat = ky * w + kx
    conj = ((-ky) % h) * w + (-kx) % w
    return flat < conj, flat == conj, conj


def independent_phases(img: GrayImage) -> np.ndarray:
    """Phases of one bin per conjugate pair, excluding self-conjugate bins.

    Bins with exactly zero magnitude have no defined phase and are skipped.
    """
    spec = np.fft.fft2(img.data)
    rep, _, _ = _conjugate_masks(spec.shape)
    keep = rep & (spec != 0)
    return np.angle(spec[keep])


def ks_test_uniform_phase(img: GrayImage, alpha: float = 0.05) -> KsOutcome:
    if img.width < 8 or img.height < 8:
        raise ValueError("phase test needs at least an 8x8 image")
    return ks_test_uniform(independent_phases(img), alpha)


def randomize_phase(img: GrayImage, seed: int) -> GrayImage:
    """Surrogate with the same magnitude spectrum and i.i.d. uniform phases.

    Phases are drawn for one bin of each conjugate pair and mirrored with
    opposite sign; self-conjugate bins keep their (real) original value.
    """
    spec = np.fft.fft2(img.data)
    rep, selfc, conj = _conjugate_masks(spec.shape)
    mags = np.abs(spec)
    draws = make_rng(seed).uniform(-np.pi, np.pi, size=int(rep.sum()))
    phase = np.zeros(spec.shape)
    phase[rep] = draws
    flat_phase = phase.ravel()
    flat_phase[conj[rep]] = -draws
    new = mags * np.exp(1j * phase)
    new[selfc] = spec[selfc]
    out = np.fft.ifft2(new)
    norm = np.linalg.norm(out.real)
    residue = np.linalg.norm(out.imag)
    if residue > 1e-9 * max(norm, np.finfo(float).tiny):
        raise ArithmeticError(f"phase randomization left imaginary residue {residue:.3g}")
    return GrayImage(out.real)


# --- combined report --------------------------------------------------------

@dataclass(frozen=True)
class GaussianityReport:
    raw: KsOutcome
    texture: KsOutcome
    phase: KsOutcome
    kurtosis_raw: float
    kurtosis_structure: float | None
    kurtosis_texture: float
    settings: DiffusionSettings

    def as_dict(self) -> dict:
        return {
            "raw_gaussian": self.raw.as_dict(),
            "texture_gaussian": self.texture.as_dict(),
            "texture_phase_uniform": self.phase.as_dict(),
            "kurtosis": {
                "raw": self.kurtosis_raw,
                "structure": self.kurtosis_structure,
                "texture": self.kurtosis_texture,
            },
            "diffusion": self.settings.as_dict(),
        }


class DegenerateTextureError(DegenerateInputError):
    def __init__(self):
        super().__init__("degenerate texture layer")


def texture_is_degenerate(texture: GrayImage, reference: GrayImage) -> bool:
    """True when the texture layer is negligible next to the input's range."""
    scale = max(float(np.ptp(reference.data)), float(np.max(np.abs(reference.data))), 1e-300)
    return float(np.max(np.abs(texture.data))) <= 1e-9 * scale


def gaussianity_report(img: GrayImage, settings: DiffusionSettings | None = None,
                       alpha: float = 0.05, lilliefors: bool = False) -> GaussianityReport:
    """Raw vs texture-layer Gaussianity of Haar details, plus texture phase test."""
    sep = separate(img, settings)
    if texture_is_degenerate(sep.texture, img):
        raise DegenerateTextureError()
    raw_detail = haar_detail(img).coefficients
    tex_detail = haar_detail(sep.texture).coefficients
    struct_detail = haar_detail(sep.structure).coefficients
    try:
        k_struct = kurtosis(struct_detail)
    except DegenerateInputError:
        k_struct = None
    return GaussianityReport(
        raw=ks_test_gaussian(raw_detail, alpha, lilliefors),
        texture=ks_test_gaussian(tex_detail, alpha, lilliefors),
        phase=ks_test_uniform_phase(sep.texture, alpha),
        kurtosis_raw=kurtosis(raw_detail),
        kurtosis_structure=k_struct,
        kurtosis_texture=kurtosis(tex_detail),
        settings=sep.settings,
    )
